// Copyright (c) 2026 The vqdprobe Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vqd/corpus.hpp"
#include "vqd/embedstore.hpp"

namespace vqd {

struct SynthSpec {
  size_t n_speakers = 200;
  size_t utterances_per_speaker = 10;
  uint32_t dim = 64;
  uint64_t seed = 0;
  /// Planted direction per dimension. Missing dimensions get a Gaussian
  /// direction drawn from weight_seed, so corpora sharing weight_seed share
  /// the same planted "world". An all-zero vector plants no signal.
  std::map<Dimension, std::vector<double>> signal_weights;
  uint64_t weight_seed = 1;
  double noise_sigma = 0.25;
  std::array<double, kNumCategories> category_mix = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  double dimension_correlation = 0.0;  // weight of the shared factor, [0, 1]
  double speaker_variance_fraction = 0.5;
  std::array<double, 3> split_fractions = {0.7, 0.1, 0.2};  // train/val/test
  std::string backend_name = "synth";
  std::string source_name = "synth";
  /// Binary severity = 1 for the top `severity_rate` fraction of the summed
  /// noise-free planted signal.
  bool emit_severity = false;
  double severity_rate = 0.5;
  /// When > 0, each utterance gets a uniform emotion and its embedding is
  /// shifted along the mean planted direction by
  /// emotion_shift * (emotion index - 3).
  double emotion_shift = 0.0;
  bool assign_splits = true;
};

struct SynthCorpus {
  Manifest manifest;
  EmbeddingTable table;
  /// Continuous pre-quantization latent per dimension, record order.
  std::array<std::vector<double>, kNumDimensions> latent;
};

/// Throws InvalidArgument when the spec violates its invariants.
void validate(const SynthSpec& spec);

SynthCorpus generate(const SynthSpec& spec);

/// Empirical septile binning: score = 1 + floor(7 r / n), r = number of
/// strictly smaller values. Monotone, ties share a score.
std::vector<int> quantize_to_scale(std::span<const double> z);

}  // namespace vqd

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


#include "vqd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "vqd/errors.hpp"
#include "vqd/metrics.hpp"

namespace vqd {

namespace {

constexpr uint64_t kSpeakerStream = 0x5350'4B00;  // "SPK"
constexpr uint64_t kWeightStream = 0x5747'5400;   // "WGT"

std::vector<double> unit(std::vector<double> v) {
  double norm = 0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::string format_id(const char* fmt, size_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

void validate(const SynthSpec& spec) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::InvalidArgument, "synth spec: " + msg);
  };
  if (spec.n_speakers == 0 || spec.utterances_per_speaker == 0) {
    fail("need at least one speaker and one utterance per speaker");
  }
  if (spec.dim == 0) fail("dim must be positive");
  if (!(spec.noise_sigma >= 0)) fail("noise_sigma must be >= 0");
  if (!(spec.dimension_correlation >= 0 && spec.dimension_correlation <= 1)) {
    fail("dimension_correlation must lie in [0, 1]");
  }
  if (!(spec.speaker_variance_fraction >= 0 && spec.speaker_variance_fraction <= 1)) {
    fail("speaker_variance_fraction must lie in [0, 1]");
  }
  auto check_simplex = [&](std::span<const double> p, const char* what) {
    double sum = 0;
    for (double v : p) {
      if (!(v >= 0)) fail(std::string(what) + " must be non-negative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) fail(std::string(what) + " must sum to 1");
  };
  check_simplex(spec.category_mix, "category_mix");
  check_simplex(spec.split_fractions, "split_fractions");
  if (!(spec.severity_rate > 0 && spec.severity_rate < 1)) {
    fail("severity_rate must lie in (0, 1)");
  }
  for (const auto& [d, w] : spec.signal_weights) {
    if (w.size() != spec.dim) {
      fail("signal weights for " + std::string(to_string(d)) + " have length " +
           std::to_string(w.size()) + ", expected " + std::to_string(spec.dim));
    }
  }
}

std::vector<int> quantize_to_scale(std::span<const double> z) {
  const size_t n = z.size();
  std::vector<double> sorted(z.begin(), z.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> out(n);
  for (size_t i = 0; i < n; ++i) {
    const auto below = static_cast<size_t>(
        std::lower_bound(sorted.begin(), sorted.end(), z[i]) - sorted.begin());
    out[i] = kMinScore + static_cast<int>((kNumScoreLevels * below) / n);
  }
  return out;
}

SynthCorpus generate(const SynthSpec& spec) {
  validate(spec);
  const size_t dim = spec.dim;

  // Planted directions.
  std::array<std::vector<double>, kNumDimensions> raw_weights;
  for (Dimension d : kAllDimensions) {
    if (auto it = spec.signal_weights.find(d); it != spec.signal_weights.end()) {
      raw_weights[index_of(d)] = it->second;
    } else {
      std::mt19937_64 rng(derive_seed(spec.weight_seed, kWeightStream + index_of(d)));
      std::normal_distribution<double> normal;
      auto& w = raw_weights[index_of(d)];
      w.resize(dim);
      for (double& x : w) x = normal(rng);
    }
  }
  std::array<std::vector<double>, kNumDimensions> directions;
  std::vector<double> shared(dim, 0.0);
  for (size_t k = 0; k < kNumDimensions; ++k) {
    directions[k] = unit(raw_weights[k]);
    for (size_t j = 0; j < dim; ++j) shared[j] += raw_weights[k][j] / kNumDimensions;
  }
  shared = unit(shared);

  // Speaker-stratified split: order speakers by seeded hash, then cut.
  const size_t n_spk = spec.n_speakers;
  std::vector<std::string> speakers(n_spk);
  for (size_t s = 0; s < n_spk; ++s) speakers[s] = format_id("spk%04zu", s);
  std::vector<Split> speaker_split(n_spk, Split::Train);
  if (spec.assign_splits) {
    std::vector<size_t> order(n_spk);
    std::iota(order.begin(), order.end(), size_t{0});
    std::vector<uint64_t> key(n_spk);
    for (size_t s = 0; s < n_spk; ++s) key[s] = stable_hash(spec.seed, speakers[s]);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return key[a] != key[b] ? key[a] < key[b] : a < b;
    });
    auto n_val = static_cast<size_t>(std::llround(spec.split_fractions[1] * n_spk));
    auto n_test = static_cast<size_t>(std::llround(spec.split_fractions[2] * n_spk));
    if (n_spk >= 3) {
      if (spec.split_fractions[1] > 0) n_val = std::max<size_t>(n_val, 1);
      if (spec.split_fractions[2] > 0) n_test = std::max<size_t>(n_test, 1);
    }
    n_val = std::min(n_val, n_spk);
    n_test = std::min(n_test, n_spk - n_val);
    for (size_t rank = 0; rank < n_spk; ++rank) {
      Split s = Split::Train;
      if (rank >= n_spk - n_test) {
        s = Split::Test;
      } else if (rank >= n_spk - n_test - n_val) {
        s = Split::Validation;
      }
      speaker_split[order[rank]] = s;
    }
  }

  const size_t n = n_spk * spec.utterances_per_speaker;
  SynthCorpus out;
  out.manifest.source_name = spec.source_name;
  out.manifest.records.reserve(n);
  out.table = EmbeddingTable(spec.backend_name, spec.dim);
  out.table.reserve(n);
  for (auto& l : out.latent) l.reserve(n);
  std::vector<double> signal_total;
  signal_total.reserve(n);

  const double spk_sd = std::sqrt(spec.speaker_variance_fraction);
  const double utt_sd = std::sqrt(1.0 - spec.speaker_variance_fraction);
  const double own = std::sqrt(1.0 - spec.dimension_correlation);
  const double common = std::sqrt(spec.dimension_correlation);

  std::vector<double> base(dim), x(dim);
  std::vector<float> xf(dim);
  for (size_t s = 0; s < n_spk; ++s) {
    std::mt19937_64 rng(derive_seed(spec.seed, kSpeakerStream + s));
    std::normal_distribution<double> normal;
    std::discrete_distribution<int> pick_category(spec.category_mix.begin(),
                                                  spec.category_mix.end());
    std::uniform_int_distribution<int> pick_emotion(0, kNumEmotions - 1);
    for (double& v : base) v = spk_sd * normal(rng);

    for (size_t u = 0; u < spec.utterances_per_speaker; ++u) {
      UtteranceRecord r;
      r.speaker_id = speakers[s];
      r.utterance_id = speakers[s] + format_id("_u%03zu", u);
      r.category = static_cast<Category>(pick_category(rng));
      if (spec.assign_splits) r.split = speaker_split[s];
      for (size_t j = 0; j < dim; ++j) x[j] = base[j] + utt_sd * normal(rng);
      if (spec.emotion_shift > 0) {
        const int e = pick_emotion(rng);
        r.emotion = static_cast<Emotion>(e);
        const double offset = spec.emotion_shift * (e - 3);
        for (size_t j = 0; j < dim; ++j) x[j] += offset * shared[j];
      }
      const double f = dot(shared, x);
      double total = 0;
      for (size_t k = 0; k < kNumDimensions; ++k) {
        const double planted = own * dot(directions[k], x) + common * f;
        total += planted;
        out.latent[k].push_back(planted + spec.noise_sigma * normal(rng));
      }
      signal_total.push_back(total);
      for (size_t j = 0; j < dim; ++j) xf[j] = static_cast<float>(x[j]);
      out.table.add_row(r.utterance_id, xf);
      out.manifest.records.push_back(std::move(r));
    }
  }

  for (size_t k = 0; k < kNumDimensions; ++k) {
    const auto scores = quantize_to_scale(out.latent[k]);
    for (size_t i = 0; i < n; ++i) out.manifest.records[i].scores[k] = scores[i];
  }
  if (spec.emit_severity) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return signal_total[a] > signal_total[b];
    });
    const auto n_severe = static_cast<size_t>(std::llround(spec.severity_rate * n));
    for (size_t rank = 0; rank < n; ++rank) {
      out.manifest.records[order[rank]].severity = rank < n_severe ? 1 : 0;
    }
  }
  return out;
}

}  // namespace vqd

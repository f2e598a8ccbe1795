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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vqd/corpus.hpp"
#include "vqd/embedstore.hpp"
#include "vqd/linmod.hpp"

namespace vqd {

inline constexpr double kTargetPositiveRate = 0.20;
inline constexpr int kMinThreshold = 2;
inline constexpr int kMaxThreshold = 7;

enum class SelectionMetric { SpearmanVal, AucVal };

struct SelectionResult {
  double chosen_lambda = 0.0;
  size_t chosen_index = 0;
  // (lambda, validation metric) in fitting order.
  std::vector<std::pair<double, double>> val_metric_by_lambda;
  SelectionMetric selection_metric = SelectionMetric::SpearmanVal;
};

struct ThresholdChoice {
  int threshold = kMinThreshold;
  double positive_rate = 0.0;
  bool degenerate = false;  // positive rate is 0 or 1
};

/// t in {2..7} minimizing |P(score >= t) - 0.20|; ties go to the smaller t.
ThresholdChoice binarize_threshold(std::span<const int> scores);

/// 1.0 where score >= t, else 0.0.
Eigen::VectorXd binarize(const Eigen::VectorXd& scores, int t);

struct BinaryLabel {
  size_t record_index = 0;
  int label = 0;
};

/// Labels for every record annotated on `d`, in manifest order.
std::vector<BinaryLabel> apply_binarization(const Manifest& m, Dimension d, int t);

struct SelectionOptions {
  std::optional<std::vector<double>> grid;  // default: lambda_grid on train
  SolverOptions solver;
  uint64_t seed = 0;
  std::string backend_name;
  Dimension dimension = Dimension::Intelligibility;
};

struct SelectionOutcome {
  SelectionResult selection;
  ProbeModel model;
};

/// Fits the warm-started path on train (decreasing lambda), scores each
/// point on validation (Spearman or AUC), and refits the argmax lambda on
/// train alone. For classification the targets are raw scores; the
/// threshold is chosen on train and frozen for validation.
SelectionOutcome select_lambda(const DesignMatrix& train, const DesignMatrix& val,
                               Task task, const SelectionOptions& opts = {});

/// CSV "lambda,val_metric".
void write_selection_csv(const SelectionResult& s, const std::filesystem::path& path);

}  // namespace vqd

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

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace vqd {

enum class MetricKind { Spearman, Pearson, AUC, R2, MAE };

std::string_view to_string(MetricKind k);

/// 1-based ranks; tied values share the average of their positions.
std::vector<double> average_ranks(std::span<const double> v);

/// Product-moment correlation. Throws ConstantInput when `truth` is
/// constant; a constant `pred` carries no ranking information and gives 0.
double pearson(std::span<const double> pred, std::span<const double> truth);

/// Pearson correlation of average ranks.
double spearman(std::span<const double> pred, std::span<const double> truth);

/// Mann-Whitney estimate of P(score_pos > score_neg) with half credit for
/// ties, in O(n log n). Labels must be 0/1; throws SingleClass.
double auc(std::span<const double> scores, std::span<const double> labels);

struct R2Mae {
  std::optional<double> r2;  // nullopt when truth is constant
  double mae = 0.0;
};

R2Mae r2_mae(std::span<const double> pred, std::span<const double> truth);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population (divide by k)
};

MeanStd aggregate_mean_std(std::span<const double> values);

/// Linear-interpolation sample quantile of already sorted data, p in [0,1].
double quantile_sorted(std::span<const double> sorted, double p);

struct MetricReport {
  MetricKind metric = MetricKind::Spearman;
  double point = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  size_t n = 0;
  size_t n_boot = 0;
  uint64_t seed = 0;
};

struct BootstrapOptions {
  size_t n_boot = 1000;
  uint64_t seed = 0;
  double level = 0.95;
  int max_redraws = 100;
  /// Cluster label per row (e.g. speaker index). When set, clusters are
  /// resampled with replacement and contribute all of their rows.
  std::optional<std::vector<size_t>> clusters;
  size_t jobs = 1;
};

/// Statistic evaluated on a multiset of row indices; nullopt when undefined
/// on that resample (e.g. one class only), which triggers a redraw.
using ResampledMetric =
    std::function<std::optional<double>(std::span<const size_t> rows)>;

/// Percentile bootstrap. Replicate r draws from its own generator seeded by
/// (seed, r), so results do not depend on `jobs`. Throws
/// DegenerateResampling when a replicate exhausts its redraw budget or the
/// statistic is undefined on the full sample.
MetricReport bootstrap_ci(MetricKind kind, const ResampledMetric& metric,
                          size_t n_rows, const BootstrapOptions& opts);

MetricReport bootstrap_spearman(std::span<const double> pred,
                                std::span<const double> truth,
                                const BootstrapOptions& opts);
MetricReport bootstrap_auc(std::span<const double> scores,
                           std::span<const double> labels,
                           const BootstrapOptions& opts);

/// Mixes a base seed with a stream index into an independent 64-bit seed.
uint64_t derive_seed(uint64_t base, uint64_t stream);

/// Deterministic 64-bit hash of (seed, text); stable across platforms.
uint64_t stable_hash(uint64_t seed, std::string_view text);

}  // namespace vqd

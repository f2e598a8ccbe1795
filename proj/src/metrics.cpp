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


#include "vqd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "vqd/errors.hpp"
#include "vqd/parallel.hpp"

namespace vqd {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimMismatch,
                "length mismatch: " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
  }
  if (a.size() < 2) {
    throw Error(ErrorCode::TooFewRows,
                "need at least 2 observations, got " + std::to_string(a.size()));
  }
}

std::vector<size_t> argsort(std::span<const double> v) {
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return v[a] < v[b]; });
  return order;
}

}  // namespace

std::string_view to_string(MetricKind k) {
  switch (k) {
    case MetricKind::Spearman: return "spearman";
    case MetricKind::Pearson: return "pearson";
    case MetricKind::AUC: return "auc";
    case MetricKind::R2: return "r2";
    case MetricKind::MAE: return "mae";
  }
  return "unknown";
}

std::vector<double> average_ranks(std::span<const double> v) {
  const auto order = argsort(v);
  std::vector<double> ranks(v.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i + 1;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    // Positions i..j-1 (0-based) share rank ((i+1) + j) / 2.
    const double rank = static_cast<double>(i + 1 + j) / 2.0;
    for (size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  const size_t n = pred.size();
  double mp = 0, mt = 0;
  for (size_t i = 0; i < n; ++i) {
    mp += pred[i];
    mt += truth[i];
  }
  mp /= static_cast<double>(n);
  mt /= static_cast<double>(n);
  double spt = 0, spp = 0, stt = 0;
  for (size_t i = 0; i < n; ++i) {
    const double dp = pred[i] - mp, dt = truth[i] - mt;
    spt += dp * dt;
    spp += dp * dp;
    stt += dt * dt;
  }
  if (stt == 0.0) throw Error(ErrorCode::ConstantInput, "truth is constant");
  if (spp == 0.0) return 0.0;
  return std::clamp(spt / std::sqrt(spp * stt), -1.0, 1.0);
}

double spearman(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  const auto rp = average_ranks(pred);
  const auto rt = average_ranks(truth);
  return pearson(rp, rt);
}

double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::DimMismatch, "scores and labels differ in length");
  }
  int64_t n_pos = 0;
  for (double l : labels) {
    if (l != 0.0 && l != 1.0) {
      throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
    }
    n_pos += l == 1.0;
  }
  const auto n = static_cast<int64_t>(labels.size());
  const int64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorCode::SingleClass, "AUC needs both classes");
  }
  // Twice the positive rank sum stays integral under average-rank ties.
  const auto order = argsort(scores);
  int64_t twice_rank_sum = 0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i + 1;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    int64_t pos_in_group = 0;
    for (size_t k = i; k < j; ++k) pos_in_group += labels[order[k]] == 1.0;
    twice_rank_sum += pos_in_group * static_cast<int64_t>(i + 1 + j);
    i = j;
  }
  const int64_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

R2Mae r2_mae(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  const size_t n = truth.size();
  double mt = 0;
  for (double t : truth) mt += t;
  mt /= static_cast<double>(n);
  double ss_res = 0, ss_tot = 0, abs_err = 0;
  for (size_t i = 0; i < n; ++i) {
    const double e = truth[i] - pred[i];
    ss_res += e * e;
    ss_tot += (truth[i] - mt) * (truth[i] - mt);
    abs_err += std::abs(e);
  }
  R2Mae out;
  out.mae = abs_err / static_cast<double>(n);
  if (ss_tot > 0.0) out.r2 = 1.0 - ss_res / ss_tot;
  return out;
}

MeanStd aggregate_mean_std(std::span<const double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::InvalidArgument, "aggregate of zero values");
  }
  const double k = static_cast<double>(values.size());
  MeanStd out;
  for (double v : values) out.mean += v;
  out.mean /= k;
  double ss = 0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / k);
  return out;
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

uint64_t derive_seed(uint64_t base, uint64_t stream) {
  // splitmix64 finalizer over a golden-ratio stride.
  uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

uint64_t stable_hash(uint64_t seed, std::string_view text) {
  // FNV-1a over the seed bytes then the text, finished with a mixer.
  uint64_t h = 0xcbf29ce484222325ULL;
  for (int i = 0; i < 8; ++i) {
    h ^= (seed >> (8 * i)) & 0xFF;
    h *= 0x100000001b3ULL;
  }
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(h, 0);
}

MetricReport bootstrap_ci(MetricKind kind, const ResampledMetric& metric,
                          size_t n_rows, const BootstrapOptions& opts) {
  if (n_rows == 0) throw Error(ErrorCode::TooFewRows, "bootstrap of zero rows");
  if (opts.n_boot == 0) throw Error(ErrorCode::InvalidArgument, "n_boot must be positive");
  if (!(opts.level > 0.0 && opts.level < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "level must lie in (0, 1)");
  }

  // Cluster membership lists; each row is its own cluster by default.
  std::vector<std::vector<size_t>> members;
  if (opts.clusters) {
    if (opts.clusters->size() != n_rows) {
      throw Error(ErrorCode::DimMismatch, "cluster labels do not cover all rows");
    }
    size_t k = 0;
    for (size_t c : *opts.clusters) k = std::max(k, c + 1);
    members.resize(k);
    for (size_t i = 0; i < n_rows; ++i) members[(*opts.clusters)[i]].push_back(i);
    std::erase_if(members, [](const auto& m) { return m.empty(); });
  }

  std::vector<size_t> all(n_rows);
  std::iota(all.begin(), all.end(), size_t{0});
  const auto point = metric(all);
  if (!point) {
    throw Error(ErrorCode::DegenerateResampling,
                std::string(to_string(kind)) + " undefined on the full sample");
  }

  std::vector<double> stats(opts.n_boot);
  parallel_for(opts.n_boot, opts.jobs, [&](size_t r) {
    std::mt19937_64 rng(derive_seed(opts.seed, r));
    std::vector<size_t> rows;
    rows.reserve(n_rows);
    for (int attempt = 0; attempt < opts.max_redraws; ++attempt) {
      rows.clear();
      if (members.empty()) {
        std::uniform_int_distribution<size_t> pick(0, n_rows - 1);
        for (size_t i = 0; i < n_rows; ++i) rows.push_back(pick(rng));
      } else {
        std::uniform_int_distribution<size_t> pick(0, members.size() - 1);
        for (size_t c = 0; c < members.size(); ++c) {
          const auto& m = members[pick(rng)];
          rows.insert(rows.end(), m.begin(), m.end());
        }
      }
      if (auto v = metric(rows)) {
        stats[r] = *v;
        return;
      }
    }
    throw Error(ErrorCode::DegenerateResampling,
                "replicate " + std::to_string(r) + " found no valid resample in " +
                    std::to_string(opts.max_redraws) + " draws");
  });

  std::sort(stats.begin(), stats.end());
  const double alpha = 1.0 - opts.level;
  MetricReport rep;
  rep.metric = kind;
  rep.point = *point;
  rep.ci_low = quantile_sorted(stats, alpha / 2.0);
  rep.ci_high = quantile_sorted(stats, 1.0 - alpha / 2.0);
  rep.n = n_rows;
  rep.n_boot = opts.n_boot;
  rep.seed = opts.seed;
  return rep;
}

namespace {

template <typename Fn>
MetricReport bootstrap_pair(MetricKind kind, std::span<const double> a,
                            std::span<const double> b, const BootstrapOptions& opts,
                            Fn fn) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimMismatch, "bootstrap inputs differ in length");
  }
  fn(a, b);  // surface SingleClass / ConstantInput on the full sample as is
  ResampledMetric metric = [&](std::span<const size_t> rows) -> std::optional<double> {
    std::vector<double> ra(rows.size()), rb(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      ra[i] = a[rows[i]];
      rb[i] = b[rows[i]];
    }
    try {
      return fn(std::span<const double>(ra), std::span<const double>(rb));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::SingleClass || e.code() == ErrorCode::ConstantInput ||
          e.code() == ErrorCode::TooFewRows) {
        return std::nullopt;
      }
      throw;
    }
  };
  return bootstrap_ci(kind, metric, a.size(), opts);
}

}  // namespace

MetricReport bootstrap_spearman(std::span<const double> pred,
                                std::span<const double> truth,
                                const BootstrapOptions& opts) {
  return bootstrap_pair(MetricKind::Spearman, pred, truth, opts,
                        [](auto p, auto t) { return spearman(p, t); });
}

MetricReport bootstrap_auc(std::span<const double> scores,
                           std::span<const double> labels,
                           const BootstrapOptions& opts) {
  return bootstrap_pair(MetricKind::AUC, scores, labels, opts,
                        [](auto s, auto l) { return auc(s, l); });
}

}  // namespace vqd

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


#include "vqd/modelsel.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>

#include "vqd/csv.hpp"
#include "vqd/errors.hpp"
#include "vqd/metrics.hpp"

namespace vqd {

ThresholdChoice binarize_threshold(std::span<const int> scores) {
  if (scores.empty()) {
    throw Error(ErrorCode::InvalidArgument, "threshold needs at least one score");
  }
  const auto n = static_cast<long long>(scores.size());
  ThresholdChoice best;
  long long best_gap = -1;
  for (int t = kMinThreshold; t <= kMaxThreshold; ++t) {
    long long positives = 0;
    for (int s : scores) positives += s >= t;
    // |positives/n - 1/5| compared exactly as |5 positives - n|.
    const long long gap = std::llabs(5 * positives - n);
    if (best_gap < 0 || gap < best_gap) {
      best_gap = gap;
      best.threshold = t;
      best.positive_rate = static_cast<double>(positives) / static_cast<double>(n);
    }
  }
  best.degenerate = best.positive_rate == 0.0 || best.positive_rate == 1.0;
  return best;
}

Eigen::VectorXd binarize(const Eigen::VectorXd& scores, int t) {
  return (scores.array() >= static_cast<double>(t)).cast<double>();
}

std::vector<BinaryLabel> apply_binarization(const Manifest& m, Dimension d, int t) {
  if (t < kMinThreshold || t > kMaxThreshold) {
    throw Error(ErrorCode::InvalidArgument,
                "threshold must be in [2, 7], got " + std::to_string(t));
  }
  std::vector<BinaryLabel> out;
  for (size_t i = 0; i < m.records.size(); ++i) {
    if (const auto& s = m.records[i].score(d)) {
      out.push_back({i, *s >= t ? 1 : 0});
    }
  }
  return out;
}

namespace {

std::vector<int> integer_scores(const Eigen::VectorXd& y) {
  std::vector<int> out(static_cast<size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = static_cast<int>(std::lround(y(i)));
  return out;
}

double validation_metric(Task task, const Eigen::VectorXd& pred,
                         const Eigen::VectorXd& target) {
  std::span<const double> p(pred.data(), pred.size());
  std::span<const double> t(target.data(), target.size());
  return task == Task::Regression ? spearman(p, t) : auc(p, t);
}

LinearFit fit_at(Task task, const Eigen::MatrixXd& Z, const Eigen::VectorXd& target,
                 double lambda, const SolverOptions& solver, const LinearFit* warm) {
  return task == Task::Regression ? lasso_fit(Z, target, lambda, solver, warm)
                                  : logistic_fit(Z, target, lambda, solver, warm);
}

}  // namespace

SelectionOutcome select_lambda(const DesignMatrix& train, const DesignMatrix& val,
                               Task task, const SelectionOptions& opts) {
  if (val.rows() == 0) throw Error(ErrorCode::EmptyValidation, "validation set is empty");
  if (train.X.cols() != val.X.cols()) {
    throw Error(ErrorCode::DimMismatch, "train and validation widths differ");
  }

  ProbeModel model;
  model.task = task;
  model.dimension = opts.dimension;
  model.backend_name = opts.backend_name;
  model.standardizer = fit_standardizer(train.X);

  Eigen::VectorXd train_target = train.y;
  Eigen::VectorXd val_target = val.y;
  if (task == Task::Classification) {
    const auto choice = binarize_threshold(integer_scores(train.y));
    if (choice.degenerate) {
      warn(std::string(to_string(opts.dimension)) +
           ": degenerate binarization (train positive rate " +
           std::to_string(choice.positive_rate) + ")");
    }
    model.binarization_threshold = choice.threshold;
    train_target = binarize(train.y, choice.threshold);
    val_target = binarize(val.y, choice.threshold);
    const double vpos = val_target.sum();
    if (vpos == 0.0 || vpos == static_cast<double>(val_target.size())) {
      throw Error(ErrorCode::SingleClass,
                  std::string(to_string(opts.dimension)) +
                      ": validation labels hold a single class at threshold " +
                      std::to_string(choice.threshold));
    }
  }

  const Eigen::MatrixXd z_train = model.standardizer.transform(train.X);
  const Eigen::MatrixXd z_val = model.standardizer.transform(val.X);
  const std::vector<double> grid =
      opts.grid ? *opts.grid : lambda_grid(z_train, train_target, task);
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty lambda grid");

  SelectionResult sel;
  sel.selection_metric =
      task == Task::Regression ? SelectionMetric::SpearmanVal : SelectionMetric::AucVal;
  std::optional<LinearFit> prev;
  double best = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < grid.size(); ++k) {
    LinearFit fit = fit_at(task, z_train, train_target, grid[k], opts.solver,
                           prev ? &*prev : nullptr);
    if (!fit.converged) {
      warn(std::string(to_string(opts.dimension)) + ": solver did not converge at lambda " +
           csv::format_double(grid[k]));
    }
    ProbeModel probe = model;
    probe.weights = fit.weights;
    probe.intercept = fit.intercept;
    probe.lambda = grid[k];
    const Eigen::VectorXd pred = predict(probe, val.X);
    double metric = validation_metric(task, pred, val_target);
    if (std::isnan(metric)) metric = -std::numeric_limits<double>::infinity();
    sel.val_metric_by_lambda.emplace_back(grid[k], metric);
    const bool better = metric > best || (metric == best && grid[k] > sel.chosen_lambda);
    if (k == 0 || better) {
      best = metric;
      sel.chosen_lambda = grid[k];
      sel.chosen_index = k;
    }
    prev = std::move(fit);
  }

  const LinearFit final_fit =
      fit_at(task, z_train, train_target, sel.chosen_lambda, opts.solver, nullptr);
  model.weights = final_fit.weights;
  model.intercept = final_fit.intercept;
  model.lambda = sel.chosen_lambda;
  model.train_meta.n_train = static_cast<size_t>(train.rows());
  model.train_meta.seed = opts.seed;
  model.train_meta.solver_iterations = final_fit.iterations;
  model.train_meta.converged = final_fit.converged;
  return {std::move(sel), std::move(model)};
}

void write_selection_csv(const SelectionResult& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  csv::write_record(out, {"lambda", "val_metric"});
  for (const auto& [lambda, metric] : s.val_metric_by_lambda) {
    csv::write_record(out, {csv::format_double(lambda), csv::format_double(metric)});
  }
}

}  // namespace vqd

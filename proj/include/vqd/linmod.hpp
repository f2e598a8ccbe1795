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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "vqd/corpus.hpp"

namespace vqd {

enum class Task { Regression, Classification };

std::string_view to_string(Task t);
Task parse_task(std::string_view s);

/// Per-column affine map to zero mean and unit (population) variance.
struct Standardizer {
  static constexpr double kEpsilon = 1e-8;

  Eigen::VectorXd means;
  Eigen::VectorXd stds;  // each >= kEpsilon

  Eigen::Index dim() const { return means.size(); }
  Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const;
};

/// Throws TooFewRows for n < 2. Constant columns get std = kEpsilon.
Standardizer fit_standardizer(const Eigen::MatrixXd& X);

struct SolverOptions {
  int max_iterations = 10000;  // CD sweeps (lasso) / Newton steps (logistic)
  double tolerance = 1e-6;     // max |dw| per sweep (lasso), ||grad|| (logistic)
  bool record_objective = false;
};

struct LinearFit {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // one entry per iteration when recorded
};

/// (1/2n)||y - Xw - b||^2 + lambda ||w||_1
double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& w, double b, double lambda);

/// Cyclic coordinate descent with soft-thresholding and an unpenalized
/// intercept. On non-convergence the last iterate is returned with
/// converged = false.
LinearFit lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    double lambda, const SolverOptions& opts = {},
                    const LinearFit* warm_start = nullptr);

/// max_j |x_j^T (y - mean(y))| / n: smallest lambda with an all-zero fit.
double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// (1/n) sum log(1 + exp(-s_i (x_i^T w + b))) + (lambda/2)||w||^2 where
/// s_i = 2 y_i - 1 and y_i in {0, 1}.
double logistic_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y01,
                          const Eigen::VectorXd& w, double b, double lambda);

/// Gradient of logistic_objective; the last entry is d/db.
Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& X,
                                  const Eigen::VectorXd& y01,
                                  const Eigen::VectorXd& w, double b,
                                  double lambda);

/// L2-penalized logistic regression by truncated Newton (preconditioned CG
/// inner solves) with Armijo backtracking. Throws SingleClass when y01 holds
/// one class and InvalidArgument for lambda <= 0.
LinearFit logistic_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y01,
                       double lambda, const SolverOptions& opts = {},
                       const LinearFit* warm_start = nullptr);

inline constexpr size_t kLambdaGridSize = 50;
inline constexpr double kLambdaGridRatio = 1e-3;

/// Log-spaced, strictly decreasing grid from lambda_max down to
/// lambda_max * 1e-3. Logistic grids are anchored at lambda_max = 1.
std::vector<double> lambda_grid(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                Task task, size_t k = kLambdaGridSize);

struct TrainMeta {
  size_t n_train = 0;
  uint64_t seed = 0;
  int solver_iterations = 0;
  bool converged = true;
};

struct ProbeModel {
  Task task = Task::Regression;
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double lambda = 0.0;
  Standardizer standardizer;
  Dimension dimension = Dimension::Intelligibility;
  std::string backend_name;
  std::optional<int> binarization_threshold;  // classification only
  TrainMeta train_meta;

  Eigen::Index dim() const { return weights.size(); }
};

/// Regression: w^T z + b; classification: sigmoid(w^T z + b), where z is the
/// standardized row. Throws DimMismatch.
Eigen::VectorXd predict(const ProbeModel& model, const Eigen::MatrixXd& X_raw);

nlohmann::json to_json(const ProbeModel& model);
ProbeModel probe_model_from_json(const nlohmann::json& j);

void save_model(const ProbeModel& model, const std::filesystem::path& path);
ProbeModel load_model(const std::filesystem::path& path);

}  // namespace vqd

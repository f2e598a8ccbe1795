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


#include "vqd/linmod.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "vqd/errors.hpp"

namespace vqd {

std::string_view to_string(Task t) {
  return t == Task::Regression ? "regression" : "classification";
}

Task parse_task(std::string_view s) {
  if (s == "regression") return Task::Regression;
  if (s == "classification") return Task::Classification;
  throw Error(ErrorCode::InvalidArgument, "unknown task '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Standardizer

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& X) const {
  if (X.cols() != dim()) {
    throw Error(ErrorCode::DimMismatch,
                "standardizer dim " + std::to_string(dim()) + ", input has " +
                    std::to_string(X.cols()) + " columns");
  }
  return (X.rowwise() - means.transpose()).array().rowwise() /
         stds.transpose().array();
}

Standardizer fit_standardizer(const Eigen::MatrixXd& X) {
  if (X.rows() < 2) {
    throw Error(ErrorCode::TooFewRows,
                "need at least 2 rows to standardize, got " +
                    std::to_string(X.rows()));
  }
  Standardizer s;
  const double n = static_cast<double>(X.rows());
  s.means = X.colwise().mean().transpose();
  s.stds.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - s.means(j)).square().sum() / n;
    s.stds(j) = std::max(std::sqrt(var), Standardizer::kEpsilon);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Lasso

namespace {

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

void check_shapes(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) {
    throw Error(ErrorCode::DimMismatch,
                "X has " + std::to_string(X.rows()) + " rows, y has " +
                    std::to_string(y.size()));
  }
  if (X.rows() == 0) throw Error(ErrorCode::TooFewRows, "empty design matrix");
}

}  // namespace

double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& w, double b, double lambda) {
  const double n = static_cast<double>(X.rows());
  const Eigen::VectorXd r = (y - X * w).array() - b;
  return r.squaredNorm() / (2.0 * n) + lambda * w.lpNorm<1>();
}

double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  check_shapes(X, y);
  const double n = static_cast<double>(X.rows());
  const Eigen::VectorXd centered = y.array() - y.mean();
  double best = 0.0;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    best = std::max(best, std::abs(X.col(j).dot(centered) / n));
  }
  return best;
}

LinearFit lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    double lambda, const SolverOptions& opts,
                    const LinearFit* warm_start) {
  check_shapes(X, y);
  if (!(lambda >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
  }
  const Eigen::Index d = X.cols();
  const double n = static_cast<double>(X.rows());

  LinearFit fit;
  Eigen::VectorXd residual;
  if (warm_start) {
    if (warm_start->weights.size() != d) {
      throw Error(ErrorCode::DimMismatch, "warm start has wrong dimension");
    }
    fit.weights = warm_start->weights;
    residual = y - X * fit.weights;
    fit.intercept = residual.mean();
    residual.array() -= fit.intercept;
  } else {
    // Same arithmetic as lasso_lambda_max, so lambda >= lambda_max yields
    // exact zeros on the first sweep.
    fit.weights = Eigen::VectorXd::Zero(d);
    fit.intercept = y.mean();
    residual = y.array() - fit.intercept;
  }

  Eigen::VectorXd col_sq(d);
  for (Eigen::Index j = 0; j < d; ++j) col_sq(j) = X.col(j).squaredNorm() / n;

  if (opts.record_objective) {
    fit.objective_trace.push_back(
        lasso_objective(X, y, fit.weights, fit.intercept, lambda));
  }

  for (int sweep = 1; sweep <= opts.max_iterations; ++sweep) {
    double max_delta = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double wj = fit.weights(j);
      double updated = 0.0;
      if (col_sq(j) > 0.0) {
        const double z = X.col(j).dot(residual) / n + col_sq(j) * wj;
        updated = soft_threshold(z, lambda) / col_sq(j);
      }
      const double delta = updated - wj;
      if (delta != 0.0) {
        residual.noalias() -= delta * X.col(j);
        fit.weights(j) = updated;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    const double shift = residual.mean();
    fit.intercept += shift;
    residual.array() -= shift;
    max_delta = std::max(max_delta, std::abs(shift));

    fit.iterations = sweep;
    if (opts.record_objective) {
      fit.objective_trace.push_back(
          lasso_objective(X, y, fit.weights, fit.intercept, lambda));
    }
    if (max_delta < opts.tolerance) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Logistic regression

namespace {

// log(1 + exp(-m)), without overflow.
double log1p_exp_neg(double m) {
  return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

double sigmoid(double m) {
  if (m >= 0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

void check_labels(const Eigen::VectorXd& y01) {
  Eigen::Index positives = 0;
  for (Eigen::Index i = 0; i < y01.size(); ++i) {
    if (y01(i) != 0.0 && y01(i) != 1.0) {
      throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
    }
    positives += y01(i) == 1.0;
  }
  if (positives == 0 || positives == y01.size()) {
    throw Error(ErrorCode::SingleClass,
                "labels contain only class " + std::to_string(positives ? 1 : 0));
  }
}

}  // namespace

double logistic_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y01,
                          const Eigen::VectorXd& w, double b, double lambda) {
  const Eigen::VectorXd margin = (X * w).array() + b;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < margin.size(); ++i) {
    const double s = y01(i) > 0.5 ? 1.0 : -1.0;
    loss += log1p_exp_neg(s * margin(i));
  }
  return loss / static_cast<double>(X.rows()) + 0.5 * lambda * w.squaredNorm();
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& X,
                                  const Eigen::VectorXd& y01,
                                  const Eigen::VectorXd& w, double b,
                                  double lambda) {
  const double n = static_cast<double>(X.rows());
  const Eigen::VectorXd margin = (X * w).array() + b;
  Eigen::VectorXd err(margin.size());
  for (Eigen::Index i = 0; i < margin.size(); ++i) err(i) = sigmoid(margin(i)) - y01(i);
  Eigen::VectorXd g(w.size() + 1);
  g.head(w.size()) = X.transpose() * err / n + lambda * w;
  g(w.size()) = err.sum() / n;
  return g;
}

LinearFit logistic_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y01,
                       double lambda, const SolverOptions& opts,
                       const LinearFit* warm_start) {
  check_shapes(X, y01);
  check_labels(y01);
  if (!(lambda > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "logistic lambda must be > 0");
  }
  const Eigen::Index d = X.cols();
  const double n = static_cast<double>(X.rows());

  LinearFit fit;
  if (warm_start) {
    if (warm_start->weights.size() != d) {
      throw Error(ErrorCode::DimMismatch, "warm start has wrong dimension");
    }
    fit.weights = warm_start->weights;
    fit.intercept = warm_start->intercept;
  } else {
    const double p = y01.mean();
    fit.weights = Eigen::VectorXd::Zero(d);
    fit.intercept = std::log(p / (1.0 - p));
  }

  Eigen::VectorXd w = fit.weights;
  double b = fit.intercept;
  double f = logistic_objective(X, y01, w, b, lambda);
  if (opts.record_objective) fit.objective_trace.push_back(f);

  Eigen::VectorXd curvature(X.rows());
  Eigen::VectorXd precond(d + 1);
  Eigen::VectorXd step(d + 1), resid(d + 1), zvec(d + 1), dir(d + 1), hd(d + 1);

  // H v = (1/n) [X 1]^T S [X 1] v + diag(lambda, .., lambda, 0) v
  auto hessian_times = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
    Eigen::VectorXd xv = (X * v.head(d)).array() + v(d);
    xv.array() *= curvature.array();
    out.head(d) = X.transpose() * xv / n + lambda * v.head(d);
    out(d) = xv.sum() / n;
  };

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    const Eigen::VectorXd g = logistic_gradient(X, y01, w, b, lambda);
    const double gnorm = g.norm();
    if (gnorm <= opts.tolerance) {
      fit.converged = true;
      break;
    }
    const Eigen::VectorXd margin = (X * w).array() + b;
    for (Eigen::Index i = 0; i < margin.size(); ++i) {
      const double p = sigmoid(margin(i));
      curvature(i) = p * (1.0 - p);
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      precond(j) = X.col(j).cwiseAbs2().dot(curvature) / n + lambda;
    }
    precond(d) = std::max(curvature.sum() / n, 1e-300);

    // Preconditioned CG on H step = -g, truncated at a forcing tolerance.
    const double forcing = std::min(0.5, std::sqrt(gnorm)) * gnorm;
    step.setZero();
    resid = -g;
    zvec = resid.cwiseQuotient(precond);
    dir = zvec;
    double rz = resid.dot(zvec);
    const int max_cg = static_cast<int>(2 * (d + 1)) + 10;
    for (int k = 0; k < max_cg && resid.norm() > forcing; ++k) {
      hessian_times(dir, hd);
      const double curv = dir.dot(hd);
      if (curv <= 0.0) break;
      const double alpha = rz / curv;
      step.noalias() += alpha * dir;
      resid.noalias() -= alpha * hd;
      zvec = resid.cwiseQuotient(precond);
      const double rz_next = resid.dot(zvec);
      dir = zvec + (rz_next / rz) * dir;
      rz = rz_next;
    }
    if (step.squaredNorm() == 0.0) step = -g.cwiseQuotient(precond);

    // Armijo backtracking.
    const double slope = g.dot(step);
    double t = 1.0;
    Eigen::VectorXd w_next;
    double b_next = b, f_next = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      w_next = w + t * step.head(d);
      b_next = b + t * step(d);
      f_next = logistic_objective(X, y01, w_next, b_next, lambda);
      if (f_next <= f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    fit.iterations = iter;
    if (!accepted) break;  // no further progress possible in floating point
    w = std::move(w_next);
    b = b_next;
    f = f_next;
    if (opts.record_objective) fit.objective_trace.push_back(f);
  }
  if (!fit.converged) {
    fit.converged = logistic_gradient(X, y01, w, b, lambda).norm() <= opts.tolerance;
  }
  fit.weights = std::move(w);
  fit.intercept = b;
  return fit;
}

// ---------------------------------------------------------------------------
// Grid, prediction, serialization

std::vector<double> lambda_grid(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                Task task, size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "grid size must be positive");
  double top = 1.0;
  if (task == Task::Regression) {
    top = lasso_lambda_max(X, y);
    // Constant target: every lambda gives the zero fit; keep the grid valid.
    if (!(top > 0.0)) top = 1.0;
  }
  std::vector<double> grid(k);
  grid[0] = top;
  for (size_t i = 1; i < k; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(k - 1);
    grid[i] = top * std::pow(kLambdaGridRatio, frac);
  }
  return grid;
}

Eigen::VectorXd predict(const ProbeModel& model, const Eigen::MatrixXd& X_raw) {
  if (X_raw.cols() != model.dim() || model.standardizer.dim() != model.dim()) {
    throw Error(ErrorCode::DimMismatch,
                "model expects " + std::to_string(model.dim()) +
                    " features, input has " + std::to_string(X_raw.cols()));
  }
  Eigen::VectorXd out =
      (model.standardizer.transform(X_raw) * model.weights).array() +
      model.intercept;
  if (model.task == Task::Classification) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = sigmoid(out(i));
  }
  return out;
}

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json to_json(const ProbeModel& model) {
  nlohmann::json j;
  j["task"] = to_string(model.task);
  j["backend_name"] = model.backend_name;
  j["dimension"] = to_string(model.dimension);
  j["lambda"] = model.lambda;
  j["intercept"] = model.intercept;
  j["weights"] = to_vector(model.weights);
  j["means"] = to_vector(model.standardizer.means);
  j["stds"] = to_vector(model.standardizer.stds);
  j["binarization_threshold"] = model.binarization_threshold
                                    ? nlohmann::json(*model.binarization_threshold)
                                    : nlohmann::json(nullptr);
  j["train_meta"] = {{"n_train", model.train_meta.n_train},
                     {"seed", model.train_meta.seed},
                     {"solver_iterations", model.train_meta.solver_iterations},
                     {"converged", model.train_meta.converged}};
  return j;
}

ProbeModel probe_model_from_json(const nlohmann::json& j) {
  try {
    ProbeModel m;
    m.task = parse_task(j.at("task").get<std::string>());
    m.backend_name = j.at("backend_name").get<std::string>();
    m.dimension = parse_dimension(j.at("dimension").get<std::string>());
    m.lambda = j.at("lambda").get<double>();
    m.intercept = j.at("intercept").get<double>();
    m.weights = to_eigen(j.at("weights").get<std::vector<double>>());
    m.standardizer.means = to_eigen(j.at("means").get<std::vector<double>>());
    m.standardizer.stds = to_eigen(j.at("stds").get<std::vector<double>>());
    if (!j.at("binarization_threshold").is_null()) {
      m.binarization_threshold = j.at("binarization_threshold").get<int>();
    }
    const auto& meta = j.at("train_meta");
    m.train_meta.n_train = meta.at("n_train").get<size_t>();
    m.train_meta.seed = meta.at("seed").get<uint64_t>();
    m.train_meta.solver_iterations = meta.at("solver_iterations").get<int>();
    m.train_meta.converged = meta.value("converged", true);
    if (m.weights.size() != m.standardizer.means.size() ||
        m.weights.size() != m.standardizer.stds.size()) {
      throw Error(ErrorCode::DimMismatch, "weights/means/stds lengths differ");
    }
    if (m.task == Task::Classification && !m.binarization_threshold) {
      throw Error(ErrorCode::InvalidArgument,
                  "classification model without binarization_threshold");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad model JSON: ") + e.what());
  }
}

void save_model(const ProbeModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << to_json(model).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

ProbeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument,
                path.string() + ": not valid JSON: " + e.what());
  }
  return probe_model_from_json(j);
}

}  // namespace vqd

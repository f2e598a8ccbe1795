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

// Reference implementations written from the definitions, independent of
// the library code paths they check.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace vqd::oracle {

/// rank_i = 1 + #{j : v_j < v_i} + (#{j : v_j == v_i} - 1) / 2
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (size_t j = 0; j < v.size(); ++j) {
      less += v[j] < v[i];
      equal += v[j] == v[i];
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

/// Pair counting with half credit for ties.
inline double auc(const std::vector<double>& s, const std::vector<double>& labels) {
  double wins = 0, pairs = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    if (labels[i] != 1.0) continue;
    for (size_t j = 0; j < s.size(); ++j) {
      if (labels[j] != 0.0) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

/// Largest violation of the Lasso optimality conditions for
/// (1/2n)||y - Xw - b||^2 + lambda ||w||_1 with an unpenalized intercept:
/// x_j^T r / n = lambda sign(w_j) for w_j != 0, |x_j^T r / n| <= lambda
/// otherwise, and sum(r) / n = 0.
inline double lasso_kkt_violation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& w, double b, double lambda) {
  const double n = static_cast<double>(X.rows());
  const Eigen::VectorXd r = y - X * w - Eigen::VectorXd::Constant(X.rows(), b);
  double worst = std::abs(r.sum() / n);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double g = X.col(j).dot(r) / n;
    if (w(j) != 0.0) {
      worst = std::max(worst, std::abs(g - lambda * (w(j) > 0 ? 1.0 : -1.0)));
    } else {
      worst = std::max(worst, std::max(0.0, std::abs(g) - lambda));
    }
  }
  return worst;
}

/// n x d design with zero-mean columns and X^T X = n I.
inline Eigen::MatrixXd orthonormal_design(Eigen::Index n, Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd A(n, d + 1);
  A.col(0).setOnes();
  for (Eigen::Index j = 1; j <= d; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) A(i, j) = g(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, d + 1);
  return Q.rightCols(d) * std::sqrt(static_cast<double>(n));
}

inline double soft_threshold(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}

/// (1/n) sum log(1 + exp(-s m)) + lambda/2 ||w||^2, s = 2y - 1.
inline double logistic_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& w, double b, double lambda) {
  double f = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double m = (2.0 * y(i) - 1.0) * (X.row(i).dot(w) + b);
    f += m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
  }
  return f / static_cast<double>(X.rows()) + 0.5 * lambda * w.squaredNorm();
}

/// Central finite differences over (w, b), step h.
inline Eigen::VectorXd logistic_fd_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                            const Eigen::VectorXd& w, double b, double lambda,
                                            double h = 1e-5) {
  const Eigen::Index d = w.size();
  Eigen::VectorXd g(d + 1);
  for (Eigen::Index j = 0; j <= d; ++j) {
    Eigen::VectorXd wp = w, wm = w;
    double bp = b, bm = b;
    if (j < d) {
      wp(j) += h;
      wm(j) -= h;
    } else {
      bp += h;
      bm -= h;
    }
    g(j) = (logistic_objective(X, y, wp, bp, lambda) - logistic_objective(X, y, wm, bm, lambda)) /
           (2 * h);
  }
  return g;
}

}  // namespace vqd::oracle

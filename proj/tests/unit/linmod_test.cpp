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


#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "test_support.hpp"
#include "vqd/linmod.hpp"

namespace vqd {
namespace {

using testing::error_of;

Eigen::MatrixXd gaussian(Eigen::Index n, Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = g(rng);
  }
  return X;
}

Eigen::VectorXd planted(const Eigen::MatrixXd& X, std::mt19937_64& rng, double noise) {
  std::normal_distribution<double> g;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(X.cols());
  for (Eigen::Index j = 0; j < std::min<Eigen::Index>(3, X.cols()); ++j) w(j) = 1.0 + j;
  Eigen::VectorXd y = X * w;
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += 2.0 + noise * g(rng);
  return y;
}

TEST(StandardizerTest, Cases) {
  Eigen::MatrixXd X(2, 2);
  X << 0, 1, 0, 3;
  const auto s = fit_standardizer(X);
  EXPECT_EQ(s.means(0), 0.0);
  EXPECT_EQ(s.stds(0), Standardizer::kEpsilon);
  EXPECT_DOUBLE_EQ(s.means(1), 2.0);
  EXPECT_DOUBLE_EQ(s.stds(1), 1.0);
  EXPECT_EQ(error_of([] { fit_standardizer(Eigen::MatrixXd::Ones(1, 3)); }),
            ErrorCode::TooFewRows);
  EXPECT_EQ(error_of([&] { s.transform(Eigen::MatrixXd::Ones(2, 3)); }), ErrorCode::DimMismatch);
}

TEST(StandardizerTest, RandomMatrixIsCentredAndScaled) {
  std::mt19937_64 rng(2);
  Eigen::MatrixXd X = gaussian(100, 5, rng) * 3.0;
  X.array() += 7.0;
  const auto Z = fit_standardizer(X).transform(X);
  for (Eigen::Index j = 0; j < 5; ++j) {
    EXPECT_LT(std::abs(Z.col(j).mean()), 1e-10);
    EXPECT_NEAR(std::sqrt(Z.col(j).squaredNorm() / 100.0), 1.0, 1e-6);
  }
}

TEST(LassoTest, AboveLambdaMaxIsExactlyZero) {
  std::mt19937_64 rng(3);
  const auto X = gaussian(50, 8, rng);
  const auto y = planted(X, rng, 0.5);
  const double lmax = lasso_lambda_max(X, y);
  for (double lam : {lmax, lmax * 1.5}) {
    const auto fit = lasso_fit(X, y, lam);
    EXPECT_TRUE((fit.weights.array() == 0.0).all());
    EXPECT_NEAR(fit.intercept, y.mean(), 1e-12);
  }
  const auto below = lasso_fit(X, y, lmax * 0.99);
  EXPECT_GT((below.weights.array() != 0.0).count(), 0);
}

TEST(LassoTest, UnivariateOls) {
  std::mt19937_64 rng(4);
  Eigen::MatrixXd x = gaussian(40, 1, rng);
  x = fit_standardizer(x).transform(x);
  const auto y = planted(x, rng, 1.0);
  const auto fit = lasso_fit(x, y, 0.0);
  EXPECT_NEAR(fit.weights(0), x.col(0).dot(y) / 40.0, 1e-9);
}

TEST(LassoTest, OrthonormalDesignMatchesSoftThreshold) {
  std::mt19937_64 rng(5);
  for (Eigen::Index d : {2, 6}) {
    const auto X = oracle::orthonormal_design(60, d, rng);
    const auto y = planted(X, rng, 1.0);
    const auto fit = lasso_fit(X, y, 0.1);
    for (Eigen::Index j = 0; j < d; ++j) {
      EXPECT_NEAR(fit.weights(j), oracle::soft_threshold(X.col(j).dot(y) / 60.0, 0.1), 1e-8);
    }
  }
}

TEST(LassoTest, KktHoldsAcrossGrid) {
  std::mt19937_64 rng(6);
  const auto X = gaussian(80, 20, rng);
  const auto y = planted(X, rng, 1.0);
  for (double lam : lambda_grid(X, y, Task::Regression)) {
    const auto fit = lasso_fit(X, y, lam);
    EXPECT_TRUE(fit.converged);
    EXPECT_LT(oracle::lasso_kkt_violation(X, y, fit.weights, fit.intercept, lam), 1e-4);
  }
}

TEST(LassoTest, ObjectiveNonIncreasingPerSweep) {
  std::mt19937_64 rng(7);
  const auto X = gaussian(60, 30, rng);
  const auto y = planted(X, rng, 2.0);
  SolverOptions opts;
  opts.record_objective = true;
  const auto fit = lasso_fit(X, y, 0.05, opts);
  ASSERT_GE(fit.objective_trace.size(), 2u);
  for (size_t i = 1; i < fit.objective_trace.size(); ++i) {
    EXPECT_LE(fit.objective_trace[i], fit.objective_trace[i - 1] + 1e-12);
  }
}

TEST(LassoTest, WarmStartMatchesColdStart) {
  std::mt19937_64 rng(8);
  const auto X = gaussian(70, 15, rng);
  const auto y = planted(X, rng, 1.0);
  const auto grid = lambda_grid(X, y, Task::Regression);
  LinearFit prev;
  bool have = false;
  for (double lam : grid) {
    const auto warm = lasso_fit(X, y, lam, {}, have ? &prev : nullptr);
    const auto cold = lasso_fit(X, y, lam);
    EXPECT_NEAR(lasso_objective(X, y, warm.weights, warm.intercept, lam),
                lasso_objective(X, y, cold.weights, cold.intercept, lam), 1e-8);
    prev = warm;
    have = true;
  }
}

TEST(LassoTest, NonConvergenceIsFlagged) {
  std::mt19937_64 rng(9);
  const auto X = gaussian(30, 10, rng);
  const auto y = planted(X, rng, 1.0);
  SolverOptions opts;
  opts.max_iterations = 1;
  const auto fit = lasso_fit(X, y, 1e-4, opts);
  EXPECT_FALSE(fit.converged);
  EXPECT_EQ(fit.iterations, 1);
}

TEST(LogisticTest, ZeroDesignGivesLogitIntercept) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(10, 3);
  Eigen::VectorXd y(10);
  y << 1, 1, 1, 0, 0, 0, 0, 0, 0, 0;
  const auto fit = logistic_fit(X, y, 0.1);
  EXPECT_TRUE((fit.weights.array() == 0.0).all());
  EXPECT_NEAR(fit.intercept, std::log(0.3 / 0.7), 1e-9);
}

TEST(LogisticTest, Errors) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(4, 2);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(4);
  EXPECT_EQ(error_of([&] { logistic_fit(X, y, 0.1); }), ErrorCode::SingleClass);
  y(0) = 0;
  EXPECT_EQ(error_of([&] { logistic_fit(X, y, 0.0); }), ErrorCode::InvalidArgument);
  y(1) = 0.5;
  EXPECT_EQ(error_of([&] { logistic_fit(X, y, 0.1); }), ErrorCode::InvalidArgument);
}

TEST(LogisticTest, SeparableProblemStationaryByFiniteDifferences) {
  std::mt19937_64 rng(10);
  const auto X = gaussian(40, 3, rng);
  Eigen::VectorXd y(40);
  for (Eigen::Index i = 0; i < 40; ++i) y(i) = X(i, 0) + 0.5 * X(i, 1) > 0 ? 1.0 : 0.0;
  const auto fit = logistic_fit(X, y, 0.1);
  EXPECT_TRUE(fit.converged);
  const auto fd = oracle::logistic_fd_gradient(X, y, fit.weights, fit.intercept, 0.1);
  EXPECT_LE(fd.norm(), 1e-6);
  EXPECT_NEAR(logistic_objective(X, y, fit.weights, fit.intercept, 0.1),
              oracle::logistic_objective(X, y, fit.weights, fit.intercept, 0.1), 1e-12);
}

TEST(LogisticTest, AnalyticGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  const auto X = gaussian(50, 6, rng);
  Eigen::VectorXd y(50);
  for (Eigen::Index i = 0; i < 50; ++i) y(i) = g(rng) > 0 ? 1.0 : 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd w(6);
    for (auto& v : w) v = g(rng);
    const double b = g(rng);
    const auto an = logistic_gradient(X, y, w, b, 0.3);
    const auto fd = oracle::logistic_fd_gradient(X, y, w, b, 0.3);
    EXPECT_LE((an - fd).norm(), 1e-4 * std::max(1.0, fd.norm()));
  }
}

TEST(LambdaGridTest, Shape) {
  std::mt19937_64 rng(12);
  const auto X = gaussian(30, 5, rng);
  const auto y = planted(X, rng, 1.0);
  const auto grid = lambda_grid(X, y, Task::Regression);
  ASSERT_EQ(grid.size(), 50u);
  EXPECT_DOUBLE_EQ(grid.front(), lasso_lambda_max(X, y));
  EXPECT_NEAR(grid.back(), grid.front() * 1e-3, 1e-15);
  const double ratio = grid[1] / grid[0];
  for (size_t i = 1; i < grid.size(); ++i) {
    EXPECT_LT(grid[i], grid[i - 1]);
    EXPECT_NEAR(grid[i] / grid[i - 1], ratio, 1e-12);
  }
  EXPECT_TRUE((lasso_fit(X, y, grid.front()).weights.array() == 0.0).all());
  const auto lg = lambda_grid(X, y, Task::Classification);
  EXPECT_EQ(lg.size(), 50u);
  EXPECT_DOUBLE_EQ(lg.front(), 1.0);
}

ProbeModel small_model(Task task) {
  ProbeModel m;
  m.task = task;
  m.weights = Eigen::VectorXd::Zero(2);
  m.intercept = 0.7;
  m.standardizer.means = Eigen::VectorXd::Zero(2);
  m.standardizer.stds = Eigen::VectorXd::Ones(2);
  m.dimension = Dimension::Monopitch;
  m.backend_name = "b";
  if (task == Task::Classification) m.binarization_threshold = 3;
  return m;
}

TEST(PredictTest, ZeroWeights) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(4, 2);
  const auto r = predict(small_model(Task::Regression), X);
  EXPECT_TRUE((r.array() == 0.7).all());
  const auto c = predict(small_model(Task::Classification), X);
  for (auto v : c) EXPECT_NEAR(v, 1.0 / (1.0 + std::exp(-0.7)), 1e-15);
  EXPECT_EQ(error_of([&] { predict(small_model(Task::Regression), Eigen::MatrixXd::Ones(2, 3)); }),
            ErrorCode::DimMismatch);
}

TEST(PredictTest, ReproducesFittedResiduals) {
  std::mt19937_64 rng(13);
  const auto X = gaussian(60, 4, rng);
  const auto y = planted(X, rng, 1.0);
  ProbeModel m;
  m.standardizer = fit_standardizer(X);
  const auto Z = m.standardizer.transform(X);
  const auto fit = lasso_fit(Z, y, 0.05);
  m.weights = fit.weights;
  m.intercept = fit.intercept;
  const Eigen::VectorXd resid = y - predict(m, X);
  EXPECT_NEAR(resid.squaredNorm() / 120.0 + 0.05 * fit.weights.lpNorm<1>(),
              lasso_objective(Z, y, fit.weights, fit.intercept, 0.05), 1e-12);
}

TEST(ModelJsonTest, RoundTrip) {
  auto m = small_model(Task::Classification);
  m.weights << 0.1, -1e-300;
  m.lambda = 0.0123456789;
  m.train_meta = {100, 42, 17, false};
  testing::TempDir dir;
  save_model(m, dir / "m.json");
  const auto back = load_model(dir / "m.json");
  EXPECT_EQ(back.task, m.task);
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_EQ(back.intercept, m.intercept);
  EXPECT_EQ(back.lambda, m.lambda);
  EXPECT_EQ(back.standardizer.means, m.standardizer.means);
  EXPECT_EQ(back.dimension, m.dimension);
  EXPECT_EQ(back.binarization_threshold, 3);
  EXPECT_EQ(back.train_meta.seed, 42u);
  EXPECT_FALSE(back.train_meta.converged);
}

}  // namespace
}  // namespace vqd

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

#include "test_support.hpp"
#include "vqd/embedstore.hpp"
#include "vqd/metrics.hpp"
#include "vqd/modelsel.hpp"
#include "vqd/synth.hpp"

namespace vqd {
namespace {

using testing::error_of;

TEST(QuantizeTest, Examples) {
  EXPECT_EQ(quantize_to_scale(std::vector<double>{-3, -1, 0, 0.5, 2, 9, 10}),
            (std::vector<int>{1, 2, 3, 4, 5, 6, 7}));
  const auto c = quantize_to_scale(std::vector<double>(20, 4.2));
  EXPECT_TRUE(std::all_of(c.begin(), c.end(), [&](int v) { return v == c[0]; }));
  EXPECT_TRUE(quantize_to_scale(std::vector<double>{}).empty());
}

TEST(QuantizeTest, SeptileCountsAndMonotone) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<double> z(700);
  for (auto& v : z) v = g(rng);
  const auto s = quantize_to_scale(z);
  std::array<int, 7> count{};
  for (int v : s) ++count[v - 1];
  for (int c : count) EXPECT_NEAR(c, 100, 1);
  for (size_t i = 0; i < z.size(); ++i) {
    for (size_t j = 0; j < z.size(); j += 7) {
      if (z[i] < z[j]) EXPECT_LE(s[i], s[j]);
    }
  }
}

TEST(SynthTest, ValidateRejectsBadSpecs) {
  SynthSpec s;
  s.noise_sigma = -1;
  EXPECT_EQ(error_of([&] { validate(s); }), ErrorCode::InvalidArgument);
  s = {};
  s.category_mix = {0.5, 0.5, 0.5};
  EXPECT_EQ(error_of([&] { validate(s); }), ErrorCode::InvalidArgument);
  s = {};
  s.dimension_correlation = 1.5;
  EXPECT_EQ(error_of([&] { validate(s); }), ErrorCode::InvalidArgument);
  s = {};
  s.signal_weights[Dimension::Monopitch] = std::vector<double>(3, 1.0);
  EXPECT_EQ(error_of([&] { validate(s); }), ErrorCode::InvalidArgument);
}

TEST(SynthTest, DeterministicAndSpeakerDisjoint) {
  SynthSpec spec;
  spec.n_speakers = 40;
  spec.dim = 8;
  spec.seed = 5;
  const auto a = generate(spec);
  const auto b = generate(spec);
  EXPECT_EQ(a.manifest.records, b.manifest.records);
  EXPECT_TRUE(a.table.bitwise_equal(b.table));
  EXPECT_TRUE(check_speaker_disjoint(a.manifest).ok);
  EXPECT_EQ(a.manifest.count_split(Split::Train), 280u);
  EXPECT_EQ(a.manifest.count_split(Split::Validation), 40u);
  EXPECT_EQ(a.manifest.count_split(Split::Test), 80u);
  spec.seed = 6;
  EXPECT_NE(generate(spec).manifest.records, a.manifest.records);
}

double probe_test_spearman(const SynthCorpus& c, Dimension d) {
  auto filter = [](Split s) {
    RowFilter f;
    f.splits = std::set<Split>{s};
    return f;
  };
  const auto train = join(c.manifest, c.table, d, filter(Split::Train));
  const auto val = join(c.manifest, c.table, d, filter(Split::Validation));
  const auto test = join(c.manifest, c.table, d, filter(Split::Test));
  const auto out = select_lambda(train, val, Task::Regression);
  const Eigen::VectorXd pred = predict(out.model, test.X);
  return spearman({pred.data(), size_t(pred.size())}, {test.y.data(), size_t(test.y.size())});
}

TEST(SynthTest, NoiselessPlantedSignalIsRecovered) {
  SynthSpec spec;
  spec.dim = 16;
  spec.noise_sigma = 0;
  spec.seed = 21;
  const auto c = generate(spec);
  ASSERT_EQ(c.manifest.size(), 2000u);
  for (Dimension d : {Dimension::Intelligibility, Dimension::Breathiness}) {
    EXPECT_GE(probe_test_spearman(c, d), 0.97);
  }
}

TEST(SynthTest, ZeroWeightsPlantNothing) {
  SynthSpec spec;
  spec.dim = 16;
  spec.seed = 22;
  for (Dimension d : kAllDimensions) spec.signal_weights[d] = std::vector<double>(16, 0.0);
  const auto c = generate(spec);
  // Scores are pure noise: correlation with any embedding coordinate is ~0.
  std::vector<double> x(c.manifest.size()), y(c.manifest.size());
  for (size_t i = 0; i < x.size(); ++i) {
    x[i] = c.table.row(i)[0];
    y[i] = *c.manifest.records[i].scores[0];
  }
  EXPECT_LT(std::abs(spearman(x, y)), 0.1);
}

TEST(SynthTest, SharedFactorCorrelatesDimensions) {
  SynthSpec spec;
  spec.dim = 16;
  spec.seed = 23;
  spec.dimension_correlation = 1.0;
  // Per-dimension noise is independent; at the default 0.25 it alone pulls
  // the quantized correlations down to about 0.91.
  spec.noise_sigma = 0.1;
  std::vector<double> w(16);
  for (size_t j = 0; j < 16; ++j) w[j] = std::sin(double(j) + 1.0);
  for (Dimension d : kAllDimensions) spec.signal_weights[d] = w;
  const auto corr = annotation_correlations(generate(spec).manifest);
  for (size_t a = 0; a < kNumDimensions; ++a) {
    for (size_t b = 0; b < kNumDimensions; ++b) EXPECT_GE(*corr.r[a][b], 0.95);
  }
}

TEST(SynthTest, SeverityAndEmotionLabels) {
  SynthSpec spec;
  spec.n_speakers = 30;
  spec.dim = 8;
  spec.emit_severity = true;
  spec.severity_rate = 0.3;
  spec.emotion_shift = 0.5;
  const auto c = generate(spec);
  size_t severe = 0;
  for (const auto& r : c.manifest.records) {
    ASSERT_TRUE(r.severity);
    ASSERT_TRUE(r.emotion);
    severe += *r.severity;
  }
  EXPECT_EQ(severe, 90u);
}

}  // namespace
}  // namespace vqd

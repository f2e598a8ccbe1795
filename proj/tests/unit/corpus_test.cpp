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

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "vqd/corpus.hpp"

namespace vqd {
namespace {

using testing::error_of;
using testing::kHeader;
using testing::TempDir;
using testing::write_text;

Manifest load_text(const TempDir& dir, const std::string& body) {
  const auto p = dir / "m.csv";
  write_text(p, std::string(kHeader) + body);
  return load_manifest(p);
}

UtteranceRecord rec(std::string id, std::string spk, Split s) {
  UtteranceRecord r;
  r.utterance_id = std::move(id);
  r.speaker_id = std::move(spk);
  r.split = s;
  r.category = Category::NovelSentence;
  return r;
}

TEST(ManifestTest, ParsesAllColumns) {
  TempDir dir;
  const auto m = load_text(
      dir,
      "u1,s1,digital_command,train,1,2,3,4,5,6,7,,,\n"
      "u2,s2,spontaneous,test,,,,,,,1,1,sad,2.5\n");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.source_name, "m");
  const auto& a = m.records[0];
  EXPECT_EQ(a.category, Category::DigitalCommand);
  EXPECT_EQ(a.split, Split::Train);
  for (size_t k = 0; k < kNumDimensions; ++k) EXPECT_EQ(a.scores[k], int(k) + 1);
  EXPECT_FALSE(a.severity);
  const auto& b = m.records[1];
  EXPECT_FALSE(b.score(Dimension::Intelligibility));
  EXPECT_EQ(b.score(Dimension::Breathiness), 1);
  EXPECT_EQ(b.severity, 1);
  EXPECT_EQ(b.emotion, Emotion::Sad);
  EXPECT_DOUBLE_EQ(*b.duration_s, 2.5);
}

TEST(ManifestTest, HeaderOnlyGivesEmptyManifest) {
  TempDir dir;
  EXPECT_EQ(load_text(dir, "").size(), 0u);
}

TEST(ManifestTest, RejectsBadRows) {
  TempDir dir;
  EXPECT_EQ(error_of([&] { load_text(dir, "u1,s1,digital_command,train,8,,,,,,,,,\n"); }),
            ErrorCode::ScoreOutOfRange);
  EXPECT_EQ(error_of([&] { load_text(dir, "u1,s1,digital_command,train,0,,,,,,,,,\n"); }),
            ErrorCode::ScoreOutOfRange);
  EXPECT_EQ(error_of([&] { load_text(dir, "u1,s1,digital_command,train,x,,,,,,,,,\n"); }),
            ErrorCode::MalformedRow);
  EXPECT_EQ(error_of([&] { load_text(dir, "u1,s1,reading,train,1,,,,,,,,,\n"); }),
            ErrorCode::UnknownCategory);
  EXPECT_EQ(error_of([&] { load_text(dir, "u1,s1,digital_command,dev,1,,,,,,,,,\n"); }),
            ErrorCode::UnknownSplit);
  EXPECT_EQ(error_of([&] { load_text(dir, "u1,s1,digital_command,train,1,,,,,,,,bored,\n"); }),
            ErrorCode::UnknownEmotion);
  EXPECT_EQ(error_of([&] {
              load_text(dir,
                        "u1,s1,digital_command,train,1,,,,,,,,,\n"
                        "u1,s2,digital_command,test,1,,,,,,,,,\n");
            }),
            ErrorCode::DuplicateUtteranceId);
}

TEST(ManifestTest, MissingColumn) {
  TempDir dir;
  const auto p = dir / "m.csv";
  write_text(p, "utterance_id,speaker_id,category,split\nu1,s1,digital_command,train\n");
  EXPECT_EQ(error_of([&] { load_manifest(p); }), ErrorCode::MissingColumn);
}

TEST(ManifestTest, WriteLoadRoundTrip) {
  TempDir dir;
  Manifest m;
  auto a = rec("u,1", "s\"1", Split::Validation);
  a.scores[2] = 4;
  a.duration_s = 0.1;
  a.emotion = Emotion::Surprised;
  auto b = rec("u2", "s2", Split::Test);
  b.category.reset();
  b.split.reset();
  b.severity = 3;
  m.records = {a, b};
  write_manifest(m, dir / "rt.csv");
  const auto back = load_manifest(dir / "rt.csv");
  EXPECT_EQ(back.records, m.records);
}

TEST(ManifestTest, SplitCountsFromFixture) {
  // Split sizes of the reference corpus; every record is a distinct speaker.
  Manifest m;
  const std::pair<Split, int> sizes[] = {
      {Split::Train, 8016}, {Split::Validation, 1194}, {Split::Test, 2086}};
  int id = 0;
  for (const auto& [split, n] : sizes) {
    for (int i = 0; i < n; ++i, ++id) {
      m.records.push_back(rec("u" + std::to_string(id), "s" + std::to_string(id), split));
    }
  }
  EXPECT_EQ(m.count_split(Split::Train), 8016u);
  EXPECT_EQ(m.count_split(Split::Validation), 1194u);
  EXPECT_EQ(m.count_split(Split::Test), 2086u);
}

TEST(SpeakerDisjointTest, Cases) {
  Manifest ok;
  ok.records = {rec("a", "s1", Split::Train), rec("b", "s2", Split::Test)};
  EXPECT_TRUE(check_speaker_disjoint(ok).ok);

  Manifest bad;
  bad.records = {rec("a", "s1", Split::Train), rec("b", "s1", Split::Test),
                 rec("c", "s2", Split::Test)};
  const auto r = check_speaker_disjoint(bad);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.offending_speakers, std::vector<std::string>{"s1"});

  Manifest single;
  single.records = {rec("a", "s1", Split::Train), rec("b", "s1", Split::Train)};
  const auto s = check_speaker_disjoint(single);
  EXPECT_TRUE(s.ok);
  EXPECT_TRUE(s.offending_speakers.empty());
}

double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return (sxy / n) / (std::sqrt(sxx / n) * std::sqrt(syy / n));
}

TEST(CorrelationTest, DuplicateAndReversedColumns) {
  Manifest m;
  const int a[] = {1, 2, 3};
  for (int i = 0; i < 3; ++i) {
    auto r = rec("u" + std::to_string(i), "s", Split::Train);
    r.scores[0] = a[i];
    r.scores[1] = a[i];
    r.scores[2] = 4 - a[i];
    m.records.push_back(r);
  }
  const auto c = annotation_correlations(m);
  EXPECT_DOUBLE_EQ(*c.at(Dimension::Intelligibility, Dimension::ImpreciseConsonants), 1.0);
  EXPECT_DOUBLE_EQ(*c.at(Dimension::Intelligibility, Dimension::HarshVoice), -1.0);
  EXPECT_DOUBLE_EQ(*c.at(Dimension::Intelligibility, Dimension::Intelligibility), 1.0);
  EXPECT_FALSE(c.at(Dimension::Intelligibility, Dimension::Naturalness));
  EXPECT_EQ(c.overlap[0][3], 0u);
}

TEST(CorrelationTest, MatchesOracleOnRandomManifest) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> score(1, 7);
  std::bernoulli_distribution present(0.8);
  Manifest m;
  for (int i = 0; i < 20; ++i) {
    auto r = rec("u" + std::to_string(i), "s", Split::Train);
    for (auto& s : r.scores) {
      if (present(rng)) s = score(rng);
    }
    m.records.push_back(r);
  }
  const auto c = annotation_correlations(m);
  for (size_t a = 0; a < kNumDimensions; ++a) {
    for (size_t b = 0; b < kNumDimensions; ++b) {
      std::vector<double> x, y;
      for (const auto& r : m.records) {
        if (r.scores[a] && r.scores[b]) {
          x.push_back(*r.scores[a]);
          y.push_back(*r.scores[b]);
        }
      }
      EXPECT_EQ(c.overlap[a][b], x.size());
      ASSERT_TRUE(c.r[a][b]);
      EXPECT_NEAR(*c.r[a][b], oracle_pearson(x, y), 1e-12);
    }
  }
}

TEST(HistogramTest, Cases) {
  Manifest ones;
  for (int i = 0; i < 5; ++i) {
    auto r = rec("u" + std::to_string(i), "s", Split::Train);
    for (auto& s : r.scores) s = 1;
    ones.records.push_back(r);
  }
  const auto h = score_histograms(ones, false);
  for (Dimension d : kAllDimensions) {
    EXPECT_EQ(h.counts[index_of(d)][0][0], 5u);
    EXPECT_EQ(h.total(d), 5u);
  }
  const auto empty = score_histograms(Manifest{}, true);
  for (Dimension d : kAllDimensions) EXPECT_EQ(empty.total(d), 0u);
}

TEST(HistogramTest, MatchesTally) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> score(1, 7), cat(0, 3);
  Manifest m;
  for (int i = 0; i < 30; ++i) {
    auto r = rec("u" + std::to_string(i), "s", Split::Train);
    const int c = cat(rng);
    if (c < 3) {
      r.category = kAllCategories[c];
    } else {
      r.category.reset();
    }
    for (auto& s : r.scores) s = score(rng);
    m.records.push_back(r);
  }
  const auto h = score_histograms(m, true);
  for (size_t d = 0; d < kNumDimensions; ++d) {
    for (size_t g = 0; g < ScoreHistogram::kNumGroups; ++g) {
      for (int s = 1; s <= 7; ++s) {
        size_t n = 0;
        for (const auto& r : m.records) {
          const size_t grp = r.category ? index_of(*r.category) : ScoreHistogram::kUncategorized;
          n += grp == g && r.scores[d] == s;
        }
        EXPECT_EQ(h.counts[d][g][s - 1], n);
      }
    }
  }
}

Manifest eligibility_fixture(int n, int elevated) {
  Manifest m;
  for (int i = 0; i < n; ++i) {
    auto r = rec("u" + std::to_string(i), "s", Split::Train);
    r.scores[0] = i < elevated ? 3 : 1;
    r.scores[1] = 1;
    m.records.push_back(r);
  }
  return m;
}

TEST(EligibilityTest, TenPercentRule) {
  EXPECT_FALSE(dimension_eligibility(eligibility_fixture(100, 0))[0]);
  EXPECT_FALSE(dimension_eligibility(eligibility_fixture(100, 9))[0]);
  EXPECT_TRUE(dimension_eligibility(eligibility_fixture(100, 10))[0]);
  EXPECT_TRUE(dimension_eligibility(eligibility_fixture(100, 15))[0]);
  EXPECT_TRUE(dimension_eligibility(eligibility_fixture(30, 3))[0]);
  EXPECT_FALSE(dimension_eligibility(eligibility_fixture(100, 15))[1]);
  // No annotations at all.
  EXPECT_FALSE(dimension_eligibility(eligibility_fixture(100, 15))[2]);
}

TEST(NamesTest, RoundTrip) {
  for (Dimension d : kAllDimensions) EXPECT_EQ(parse_dimension(to_string(d)), d);
  for (Category c : kAllCategories) EXPECT_EQ(parse_category(to_string(c)), c);
  for (Emotion e : kAllEmotions) EXPECT_EQ(parse_emotion(to_string(e)), e);
  EXPECT_EQ(to_string(Dimension::ImpreciseConsonants), "imprecise_consonants");
  EXPECT_EQ(error_of([] { parse_dimension("loudness"); }), ErrorCode::UnknownDimension);
}

}  // namespace
}  // namespace vqd

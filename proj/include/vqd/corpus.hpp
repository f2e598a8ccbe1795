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

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vqd {

inline constexpr int kMinScore = 1;
inline constexpr int kMaxScore = 7;
inline constexpr size_t kNumScoreLevels = 7;

enum class Dimension {
  Intelligibility,
  ImpreciseConsonants,
  HarshVoice,
  Naturalness,
  Monoloudness,
  Monopitch,
  Breathiness,
};
inline constexpr size_t kNumDimensions = 7;
inline constexpr std::array<Dimension, kNumDimensions> kAllDimensions = {
    Dimension::Intelligibility, Dimension::ImpreciseConsonants,
    Dimension::HarshVoice,      Dimension::Naturalness,
    Dimension::Monoloudness,    Dimension::Monopitch,
    Dimension::Breathiness,
};

enum class Category { DigitalCommand, NovelSentence, Spontaneous };
inline constexpr size_t kNumCategories = 3;
inline constexpr std::array<Category, kNumCategories> kAllCategories = {
    Category::DigitalCommand, Category::NovelSentence, Category::Spontaneous};

enum class Split { Train, Validation, Test };

enum class Emotion { Calm, Happy, Sad, Angry, Fearful, Disgust, Surprised };
inline constexpr size_t kNumEmotions = 7;
inline constexpr std::array<Emotion, kNumEmotions> kAllEmotions = {
    Emotion::Calm,    Emotion::Happy,   Emotion::Sad,      Emotion::Angry,
    Emotion::Fearful, Emotion::Disgust, Emotion::Surprised};

constexpr size_t index_of(Dimension d) { return static_cast<size_t>(d); }
constexpr size_t index_of(Category c) { return static_cast<size_t>(c); }
constexpr size_t index_of(Emotion e) { return static_cast<size_t>(e); }

// Canonical file spellings, e.g. "imprecise_consonants", "digital_command".
std::string_view to_string(Dimension d);
std::string_view to_string(Category c);
std::string_view to_string(Split s);
std::string_view to_string(Emotion e);

// Throw Error{UnknownDimension|UnknownCategory|UnknownSplit|UnknownEmotion}.
Dimension parse_dimension(std::string_view s);
Category parse_category(std::string_view s);
Split parse_split(std::string_view s);
Emotion parse_emotion(std::string_view s);

struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  // Empty cells in external datasets (no speech-category or split notion).
  std::optional<Category> category;
  std::optional<Split> split;
  std::array<std::optional<int>, kNumDimensions> scores{};
  std::optional<int> severity;
  std::optional<Emotion> emotion;
  std::optional<double> duration_s;

  const std::optional<int>& score(Dimension d) const {
    return scores[index_of(d)];
  }

  bool operator==(const UtteranceRecord&) const = default;
};

struct Manifest {
  std::vector<UtteranceRecord> records;
  std::string source_name;

  size_t size() const { return records.size(); }
  size_t count_split(Split s) const;
};

/// The exact header row of a manifest CSV.
const std::vector<std::string>& manifest_columns();

Manifest load_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& m, const std::filesystem::path& path);

struct SpeakerDisjointReport {
  bool ok = true;
  std::vector<std::string> offending_speakers;  // sorted
};

/// Speakers appearing under more than one split. Records without a split
/// are ignored.
SpeakerDisjointReport check_speaker_disjoint(const Manifest& m);

/// Pairwise Pearson correlation of annotations. A cell is undefined
/// (nullopt) when fewer than two records carry both dimensions or when
/// either is constant on the overlap.
struct CorrelationMatrix {
  std::array<std::array<std::optional<double>, kNumDimensions>, kNumDimensions>
      r{};
  std::array<std::array<size_t, kNumDimensions>, kNumDimensions> overlap{};

  const std::optional<double>& at(Dimension a, Dimension b) const {
    return r[index_of(a)][index_of(b)];
  }
};

CorrelationMatrix annotation_correlations(const Manifest& m);

/// counts[dimension][group][score-1]. With by_category the groups are the
/// three categories plus a trailing group for records without a category;
/// otherwise everything lands in group 0.
struct ScoreHistogram {
  static constexpr size_t kNumGroups = kNumCategories + 1;
  static constexpr size_t kUncategorized = kNumCategories;

  bool by_category = false;
  std::array<std::array<std::array<size_t, kNumScoreLevels>, kNumGroups>,
             kNumDimensions>
      counts{};

  size_t total(Dimension d) const;
};

ScoreHistogram score_histograms(const Manifest& m, bool by_category);

/// True iff at least 10% of annotated samples of the dimension score >= 2.
std::array<bool, kNumDimensions> dimension_eligibility(const Manifest& m);

}  // namespace vqd

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


#include "vqd/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_set>

#include "vqd/csv.hpp"
#include "vqd/errors.hpp"

namespace vqd {

namespace {

constexpr std::array<std::string_view, kNumDimensions> kDimensionNames = {
    "intelligibility", "imprecise_consonants", "harsh_voice", "naturalness",
    "monoloudness",    "monopitch",            "breathiness"};
constexpr std::array<std::string_view, kNumCategories> kCategoryNames = {
    "digital_command", "novel_sentence", "spontaneous"};
constexpr std::array<std::string_view, 3> kSplitNames = {"train", "validation",
                                                         "test"};
constexpr std::array<std::string_view, kNumEmotions> kEmotionNames = {
    "calm", "happy", "sad", "angry", "fearful", "disgust", "surprised"};

template <typename Enum, size_t N>
Enum parse_enum(std::string_view s, const std::array<std::string_view, N>& names,
                ErrorCode code) {
  for (size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<Enum>(i);
  }
  throw Error(code, "'" + std::string(s) + "'");
}

enum Column : size_t {
  kUtteranceId,
  kSpeakerId,
  kCategory,
  kSplit,
  kFirstScore,
  kSeverity = kFirstScore + kNumDimensions,
  kEmotion,
  kDuration,
  kNumColumns,
};

std::string row_context(size_t row) {
  return "row " + std::to_string(row);
}

int parse_int(std::string_view cell, size_t row, std::string_view column) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw Error(ErrorCode::MalformedRow,
                row_context(row) + ": column " + std::string(column) +
                    " is not an integer: '" + std::string(cell) + "'");
  }
  return value;
}

double parse_double(std::string_view cell, size_t row, std::string_view column) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw Error(ErrorCode::MalformedRow,
                row_context(row) + ": column " + std::string(column) +
                    " is not a number: '" + std::string(cell) + "'");
  }
  return value;
}

}  // namespace

std::string_view to_string(Dimension d) { return kDimensionNames[index_of(d)]; }
std::string_view to_string(Category c) { return kCategoryNames[index_of(c)]; }
std::string_view to_string(Split s) {
  return kSplitNames[static_cast<size_t>(s)];
}
std::string_view to_string(Emotion e) { return kEmotionNames[index_of(e)]; }

Dimension parse_dimension(std::string_view s) {
  return parse_enum<Dimension>(s, kDimensionNames, ErrorCode::UnknownDimension);
}
Category parse_category(std::string_view s) {
  return parse_enum<Category>(s, kCategoryNames, ErrorCode::UnknownCategory);
}
Split parse_split(std::string_view s) {
  return parse_enum<Split>(s, kSplitNames, ErrorCode::UnknownSplit);
}
Emotion parse_emotion(std::string_view s) {
  return parse_enum<Emotion>(s, kEmotionNames, ErrorCode::UnknownEmotion);
}

size_t Manifest::count_split(Split s) const {
  return static_cast<size_t>(
      std::count_if(records.begin(), records.end(),
                    [s](const UtteranceRecord& r) { return r.split == s; }));
}

const std::vector<std::string>& manifest_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c = {"utterance_id", "speaker_id", "category",
                                  "split"};
    for (auto name : kDimensionNames) c.emplace_back(name);
    c.insert(c.end(), {"severity", "emotion", "duration_s"});
    return c;
  }();
  return cols;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open manifest " + path.string());
  }
  Manifest m;
  m.source_name = path.stem().string();

  auto header = csv::read_record(in);
  if (!header) {
    throw Error(ErrorCode::MissingColumn,
                path.string() + ": empty file, expected header row");
  }
  if (!header->empty() && header->front().starts_with("\xEF\xBB\xBF")) {
    header->front().erase(0, 3);
  }
  const auto& expected = manifest_columns();
  // Column positions in the file, by canonical index.
  std::array<size_t, kNumColumns> pos{};
  for (size_t c = 0; c < kNumColumns; ++c) {
    auto it = std::find(header->begin(), header->end(), expected[c]);
    if (it == header->end()) {
      throw Error(ErrorCode::MissingColumn, expected[c]);
    }
    pos[c] = static_cast<size_t>(it - header->begin());
  }

  std::unordered_set<std::string> seen;
  size_t row = 1;
  while (auto fields = csv::read_record(in)) {
    ++row;
    if (fields->size() == 1 && fields->front().empty()) continue;  // blank line
    if (fields->size() != header->size()) {
      throw Error(ErrorCode::MalformedRow,
                  row_context(row) + ": expected " +
                      std::to_string(header->size()) + " fields, got " +
                      std::to_string(fields->size()));
    }
    auto cell = [&](size_t c) -> const std::string& { return (*fields)[pos[c]]; };

    UtteranceRecord r;
    r.utterance_id = cell(kUtteranceId);
    r.speaker_id = cell(kSpeakerId);
    if (r.utterance_id.empty()) {
      throw Error(ErrorCode::MalformedRow, row_context(row) + ": empty utterance_id");
    }
    if (!seen.insert(r.utterance_id).second) {
      throw Error(ErrorCode::DuplicateUtteranceId, r.utterance_id);
    }
    if (!cell(kCategory).empty()) r.category = parse_category(cell(kCategory));
    if (!cell(kSplit).empty()) r.split = parse_split(cell(kSplit));
    for (size_t d = 0; d < kNumDimensions; ++d) {
      const auto& s = cell(kFirstScore + d);
      if (s.empty()) continue;
      int v = parse_int(s, row, kDimensionNames[d]);
      if (v < kMinScore || v > kMaxScore) {
        throw Error(ErrorCode::ScoreOutOfRange,
                    row_context(row) + ", " + std::string(kDimensionNames[d]) +
                        "=" + s);
      }
      r.scores[d] = v;
    }
    if (!cell(kSeverity).empty()) {
      int v = parse_int(cell(kSeverity), row, "severity");
      if (v < 0) {
        throw Error(ErrorCode::MalformedRow,
                    row_context(row) + ": negative severity " + cell(kSeverity));
      }
      r.severity = v;
    }
    if (!cell(kEmotion).empty()) r.emotion = parse_emotion(cell(kEmotion));
    if (!cell(kDuration).empty()) {
      r.duration_s = parse_double(cell(kDuration), row, "duration_s");
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  csv::write_record(out, manifest_columns());
  std::vector<std::string> f(kNumColumns);
  for (const auto& r : m.records) {
    f[kUtteranceId] = r.utterance_id;
    f[kSpeakerId] = r.speaker_id;
    f[kCategory] = r.category ? std::string(to_string(*r.category)) : "";
    f[kSplit] = r.split ? std::string(to_string(*r.split)) : "";
    for (size_t d = 0; d < kNumDimensions; ++d) {
      f[kFirstScore + d] = r.scores[d] ? std::to_string(*r.scores[d]) : "";
    }
    f[kSeverity] = r.severity ? std::to_string(*r.severity) : "";
    f[kEmotion] = r.emotion ? std::string(to_string(*r.emotion)) : "";
    f[kDuration] = r.duration_s ? csv::format_double(*r.duration_s) : "";
    csv::write_record(out, f);
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

SpeakerDisjointReport check_speaker_disjoint(const Manifest& m) {
  std::map<std::string, std::set<Split>> splits_by_speaker;
  for (const auto& r : m.records) {
    if (r.split) splits_by_speaker[r.speaker_id].insert(*r.split);
  }
  SpeakerDisjointReport report;
  for (const auto& [speaker, splits] : splits_by_speaker) {
    if (splits.size() > 1) report.offending_speakers.push_back(speaker);
  }
  report.ok = report.offending_speakers.empty();
  return report;
}

CorrelationMatrix annotation_correlations(const Manifest& m) {
  CorrelationMatrix out;
  std::vector<double> a, b;
  for (size_t i = 0; i < kNumDimensions; ++i) {
    for (size_t j = i; j < kNumDimensions; ++j) {
      a.clear();
      b.clear();
      for (const auto& r : m.records) {
        if (r.scores[i] && r.scores[j]) {
          a.push_back(*r.scores[i]);
          b.push_back(*r.scores[j]);
        }
      }
      const size_t n = a.size();
      out.overlap[i][j] = out.overlap[j][i] = n;
      if (n < 2) continue;
      if (i == j) {
        out.r[i][i] = 1.0;
        continue;
      }
      double ma = 0, mb = 0;
      for (size_t k = 0; k < n; ++k) {
        ma += a[k];
        mb += b[k];
      }
      ma /= n;
      mb /= n;
      double sab = 0, saa = 0, sbb = 0;
      for (size_t k = 0; k < n; ++k) {
        const double da = a[k] - ma, db = b[k] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
      }
      if (saa == 0 || sbb == 0) continue;
      double r = sab / std::sqrt(saa * sbb);
      r = std::clamp(r, -1.0, 1.0);
      out.r[i][j] = out.r[j][i] = r;
    }
  }
  return out;
}

size_t ScoreHistogram::total(Dimension d) const {
  size_t t = 0;
  for (const auto& group : counts[index_of(d)]) {
    for (size_t c : group) t += c;
  }
  return t;
}

ScoreHistogram score_histograms(const Manifest& m, bool by_category) {
  ScoreHistogram h;
  h.by_category = by_category;
  for (const auto& r : m.records) {
    size_t group = 0;
    if (by_category) {
      group = r.category ? index_of(*r.category) : ScoreHistogram::kUncategorized;
    }
    for (size_t d = 0; d < kNumDimensions; ++d) {
      if (r.scores[d]) ++h.counts[d][group][*r.scores[d] - kMinScore];
    }
  }
  return h;
}

std::array<bool, kNumDimensions> dimension_eligibility(const Manifest& m) {
  std::array<size_t, kNumDimensions> annotated{}, elevated{};
  for (const auto& r : m.records) {
    for (size_t d = 0; d < kNumDimensions; ++d) {
      if (!r.scores[d]) continue;
      ++annotated[d];
      if (*r.scores[d] >= 2) ++elevated[d];
    }
  }
  std::array<bool, kNumDimensions> out{};
  for (size_t d = 0; d < kNumDimensions; ++d) {
    // elevated / annotated >= 0.10, in integers.
    out[d] = annotated[d] > 0 && 10 * elevated[d] >= annotated[d];
  }
  return out;
}

}  // namespace vqd

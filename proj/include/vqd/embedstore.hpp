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
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "vqd/corpus.hpp"

namespace vqd {

inline constexpr char kEmbeddingMagic[4] = {'V', 'Q', 'D', 'E'};
inline constexpr uint32_t kEmbeddingFormatVersion = 1;

/// Expected embedding width for the known extractor backends
/// (hubert-large, hubert-large-asr, clap*, rawnet3); nullopt otherwise.
std::optional<uint32_t> expected_backend_dim(std::string_view backend_name);

/// Pooled utterance embeddings for one backend, stored row-major.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::string backend_name, uint32_t dim);

  const std::string& backend_name() const { return backend_name_; }
  uint32_t dim() const { return dim_; }
  size_t rows() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<float>& values() const { return values_; }

  std::span<const float> row(size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::optional<size_t> find(const std::string& id) const;

  /// Throws DimMismatch on wrong vector length, DuplicateId on reuse.
  void add_row(std::string id, std::span<const float> vector);
  void reserve(size_t rows);

  /// Bitwise comparison of every payload float, so NaN payloads compare too.
  bool bitwise_equal(const EmbeddingTable& other) const;

 private:
  std::string backend_name_;
  uint32_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> values_;
  std::unordered_map<std::string, size_t> index_;
};

void write_table(const EmbeddingTable& t, const std::filesystem::path& path);
EmbeddingTable read_table(const std::filesystem::path& path);

// In-memory encode/decode of the same byte layout.
std::string encode_table(const EmbeddingTable& t);
EmbeddingTable decode_table(std::string_view bytes);

struct RowFilter {
  std::optional<std::set<Split>> splits;          // nullopt = any
  std::optional<std::set<Category>> categories;   // nullopt = any

  bool accepts(const UtteranceRecord& r) const;
};

/// Records matched to their embeddings, in manifest order.
struct DesignMatrix {
  Eigen::MatrixXd X;               // n x dim
  Eigen::VectorXd y;               // target score (or severity), n
  std::vector<std::string> ids;
  std::vector<std::string> speakers;
  std::vector<size_t> record_index;  // position in the manifest
  size_t n_missing_embeddings = 0;   // matched filter+target but absent in table

  Eigen::Index rows() const { return X.rows(); }
};

/// Joins records passing the filter and annotated for `target` against the
/// table. Records without an embedding are excluded with a warning.
DesignMatrix join(const Manifest& m, const EmbeddingTable& t, Dimension target,
                  const RowFilter& filter = {});

/// Same, without a target requirement (y is left empty). Used for zero-shot
/// and affect inputs.
DesignMatrix join_features(const Manifest& m, const EmbeddingTable& t,
                           const RowFilter& filter = {});

}  // namespace vqd

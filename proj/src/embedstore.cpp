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


#include "vqd/embedstore.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "vqd/errors.hpp"

namespace vqd {

namespace {

template <typename T>
void put_le(std::string& out, T v) {
  static_assert(std::is_unsigned_v<T>);
  for (size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get_le(const char* what) {
    need(sizeof(T), what);
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }

  std::string_view take(size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(size_t n, const char* what) {
    if (remaining() < n) {
      throw Error(ErrorCode::TruncatedFile,
                  std::string("unexpected end of data reading ") + what +
                      " at byte " + std::to_string(pos_));
    }
  }

  std::string_view bytes_;
  size_t pos_ = 0;
};

void check_backend_dim(std::string_view backend, uint32_t dim) {
  if (auto want = expected_backend_dim(backend); want && *want != dim) {
    throw Error(ErrorCode::DimMismatch,
                "backend " + std::string(backend) + " expects dim " +
                    std::to_string(*want) + ", got " + std::to_string(dim));
  }
}

}  // namespace

std::optional<uint32_t> expected_backend_dim(std::string_view backend_name) {
  if (backend_name == "hubert-large" || backend_name == "hubert-large-asr") {
    return 1024;
  }
  if (backend_name == "clap" || backend_name.starts_with("clap-")) return 784;
  if (backend_name == "rawnet3") return 192;
  return std::nullopt;
}

EmbeddingTable::EmbeddingTable(std::string backend_name, uint32_t dim)
    : backend_name_(std::move(backend_name)), dim_(dim) {
  if (dim_ == 0) throw Error(ErrorCode::DimMismatch, "dim must be positive");
}

std::optional<size_t> EmbeddingTable::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingTable::add_row(std::string id, std::span<const float> vector) {
  if (vector.size() != dim_) {
    throw Error(ErrorCode::DimMismatch,
                "row '" + id + "' has length " + std::to_string(vector.size()) +
                    ", table dim is " + std::to_string(dim_));
  }
  if (!index_.emplace(id, ids_.size()).second) {
    throw Error(ErrorCode::DuplicateId, id);
  }
  ids_.push_back(std::move(id));
  values_.insert(values_.end(), vector.begin(), vector.end());
}

void EmbeddingTable::reserve(size_t rows) {
  ids_.reserve(rows);
  values_.reserve(rows * dim_);
  index_.reserve(rows);
}

bool EmbeddingTable::bitwise_equal(const EmbeddingTable& other) const {
  return backend_name_ == other.backend_name_ && dim_ == other.dim_ &&
         ids_ == other.ids_ && values_.size() == other.values_.size() &&
         std::memcmp(values_.data(), other.values_.data(),
                     values_.size() * sizeof(float)) == 0;
}

std::string encode_table(const EmbeddingTable& t) {
  if (t.dim() == 0) throw Error(ErrorCode::DimMismatch, "dim must be positive");
  check_backend_dim(t.backend_name(), t.dim());
  if (t.values().size() != t.rows() * t.dim()) {
    throw Error(ErrorCode::DimMismatch, "payload size does not match rows x dim");
  }
  if (t.backend_name().size() > std::numeric_limits<uint16_t>::max()) {
    throw Error(ErrorCode::InvalidArgument, "backend name longer than 65535 bytes");
  }
  std::string out;
  out.reserve(22 + t.backend_name().size() +
              t.rows() * (2 + 16 + size_t{4} * t.dim()));
  out.append(kEmbeddingMagic, 4);
  put_le<uint32_t>(out, kEmbeddingFormatVersion);
  put_le<uint32_t>(out, t.dim());
  put_le<uint64_t>(out, t.rows());
  put_le<uint16_t>(out, static_cast<uint16_t>(t.backend_name().size()));
  out.append(t.backend_name());
  for (size_t i = 0; i < t.rows(); ++i) {
    const auto& id = t.ids()[i];
    if (id.size() > std::numeric_limits<uint16_t>::max()) {
      throw Error(ErrorCode::InvalidArgument, "utterance id longer than 65535 bytes");
    }
    put_le<uint16_t>(out, static_cast<uint16_t>(id.size()));
    out.append(id);
    for (float f : t.row(i)) put_le<uint32_t>(out, std::bit_cast<uint32_t>(f));
  }
  return out;
}

EmbeddingTable decode_table(std::string_view bytes) {
  Reader in(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kEmbeddingMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic,
                "expected 'VQDE', got '" +
                    std::string(bytes.substr(0, std::min<size_t>(4, bytes.size()))) +
                    "'");
  }
  in.take(4, "magic");
  const auto version = in.get_le<uint32_t>("version");
  if (version != kEmbeddingFormatVersion) {
    throw Error(ErrorCode::UnsupportedVersion, std::to_string(version));
  }
  const auto dim = in.get_le<uint32_t>("dim");
  const auto count = in.get_le<uint64_t>("row_count");
  const auto name_len = in.get_le<uint16_t>("backend_name_len");
  std::string name(in.take(name_len, "backend_name"));
  EmbeddingTable t(std::move(name), dim);
  check_backend_dim(t.backend_name(), dim);
  // Guard the reservation against a corrupt count.
  const size_t min_row_bytes = 2 + size_t{4} * dim;
  if (count > in.remaining() / min_row_bytes) {
    throw Error(ErrorCode::TruncatedFile,
                "header announces " + std::to_string(count) +
                    " rows but only " + std::to_string(in.remaining()) +
                    " payload bytes remain");
  }
  t.reserve(count);
  std::vector<float> vec(dim);
  for (uint64_t r = 0; r < count; ++r) {
    const auto id_len = in.get_le<uint16_t>("id_len");
    std::string id(in.take(id_len, "id"));
    for (uint32_t k = 0; k < dim; ++k) {
      vec[k] = std::bit_cast<float>(in.get_le<uint32_t>("vector"));
    }
    t.add_row(std::move(id), vec);
  }
  return t;
}

void write_table(const EmbeddingTable& t, const std::filesystem::path& path) {
  const std::string bytes = encode_table(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

EmbeddingTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return decode_table(bytes);
}

bool RowFilter::accepts(const UtteranceRecord& r) const {
  if (splits && (!r.split || !splits->contains(*r.split))) return false;
  if (categories && (!r.category || !categories->contains(*r.category))) {
    return false;
  }
  return true;
}

namespace {

DesignMatrix join_impl(const Manifest& m, const EmbeddingTable& t,
                       std::optional<Dimension> target, const RowFilter& filter) {
  DesignMatrix out;
  std::vector<size_t> table_rows;
  for (size_t i = 0; i < m.records.size(); ++i) {
    const auto& r = m.records[i];
    if (!filter.accepts(r)) continue;
    if (target && !r.score(*target)) continue;
    auto row = t.find(r.utterance_id);
    if (!row) {
      ++out.n_missing_embeddings;
      continue;
    }
    table_rows.push_back(*row);
    out.record_index.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(table_rows.size());
  if (n == 0) {
    throw Error(ErrorCode::EmptyJoin,
                "no manifest records matched the filter in table '" +
                    t.backend_name() + "'");
  }
  if (out.n_missing_embeddings > 0) {
    warn(std::to_string(out.n_missing_embeddings) + " record(s) of " +
         m.source_name + " have no embedding in '" + t.backend_name() +
         "' and were excluded");
  }
  out.X.resize(n, t.dim());
  if (target) out.y.resize(n);
  out.ids.reserve(n);
  out.speakers.reserve(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& r = m.records[out.record_index[k]];
    auto v = t.row(table_rows[k]);
    for (uint32_t j = 0; j < t.dim(); ++j) out.X(k, j) = v[j];
    if (target) out.y(k) = *r.score(*target);
    out.ids.push_back(r.utterance_id);
    out.speakers.push_back(r.speaker_id);
  }
  return out;
}

}  // namespace

DesignMatrix join(const Manifest& m, const EmbeddingTable& t, Dimension target,
                  const RowFilter& filter) {
  return join_impl(m, t, target, filter);
}

DesignMatrix join_features(const Manifest& m, const EmbeddingTable& t,
                           const RowFilter& filter) {
  return join_impl(m, t, std::nullopt, filter);
}

}  // namespace vqd

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

#include <stdexcept>
#include <string>
#include <string_view>

namespace vqd {

enum class ErrorCode {
  // corpus
  MissingColumn,
  DuplicateUtteranceId,
  ScoreOutOfRange,
  UnknownCategory,
  UnknownSplit,
  UnknownEmotion,
  UnknownDimension,
  MalformedRow,
  // embedstore
  IoError,
  DimMismatch,
  BadMagic,
  UnsupportedVersion,
  TruncatedFile,
  DuplicateId,
  EmptyJoin,
  // linmod / modelsel / metrics
  TooFewRows,
  SingleClass,
  EmptyValidation,
  ConstantInput,
  ConstantTruth,
  DegenerateResampling,
  InvalidArgument,
  // harness / cli
  EmptyCategory,
  NotNormalized,
  NonBinarySeverity,
  MissingModel,
  ConfigInvalid,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure raised by the library. what() carries "<CodeName>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Writes "warn: <msg>" to stderr. Thread-safe.
void warn(std::string_view msg);

}  // namespace vqd

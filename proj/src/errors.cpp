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


#include "vqd/errors.hpp"

#include <iostream>
#include <mutex>

namespace vqd {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::DuplicateUtteranceId: return "DuplicateUtteranceId";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::UnknownSplit: return "UnknownSplit";
    case ErrorCode::UnknownEmotion: return "UnknownEmotion";
    case ErrorCode::UnknownDimension: return "UnknownDimension";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyJoin: return "EmptyJoin";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::EmptyValidation: return "EmptyValidation";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::ConstantTruth: return "ConstantTruth";
    case ErrorCode::DegenerateResampling: return "DegenerateResampling";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyCategory: return "EmptyCategory";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::NonBinarySeverity: return "NonBinarySeverity";
    case ErrorCode::MissingModel: return "MissingModel";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

void warn(std::string_view msg) {
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "warn: " << msg << '\n';
}

}  // namespace vqd

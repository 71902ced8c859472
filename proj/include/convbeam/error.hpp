// Copyright 2026 The convbeam Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace convbeam {

enum class ErrorCode {
  kDimensionMismatch,
  kShapeMismatch,
  kSingularMatrix,
  kZeroTrace,
  kDegenerateSteering,
  kTooShort,
  kTooFewFrames,
  kInvalidParam,
  kMissingGroundTruth,
  kLengthMismatch,
  kZeroReference,
  kTooManySources,
  kUnsupportedFormat,
  kIo,
  kSampleRateMismatch,
};

inline const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kSingularMatrix: return "SingularMatrix";
    case ErrorCode::kZeroTrace: return "ZeroTrace";
    case ErrorCode::kDegenerateSteering: return "DegenerateSteering";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kTooFewFrames: return "TooFewFrames";
    case ErrorCode::kInvalidParam: return "InvalidParam";
    case ErrorCode::kMissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kZeroReference: return "ZeroReference";
    case ErrorCode::kTooManySources: return "TooManySources";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kSampleRateMismatch: return "SampleRateMismatch";
  }
  return "Unknown";
}

// Every failure in the library is reported through this one type; callers
// that care about the cause switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace convbeam

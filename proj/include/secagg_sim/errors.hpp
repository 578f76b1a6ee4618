/*
 * Copyright 2026 The secagg-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace secagg_sim {

enum class ErrorCode {
  kInversionOfZero,
  kLengthMismatch,
  kDimensionMismatch,
  kInvalidParams,
  kEmptySecret,
  kThresholdNotMet,
  kInconsistentParams,
  kDuplicatePoints,
  kMixedOwnerPoints,
  kInvalidPublicKey,
  kAuthFailure,
  kUnknownDestination,
  kEmptyDataset,
  kInvalidDegree,
  kDoubleTermination,
  kMalformedMessage,
  kParseError,
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInversionOfZero: return "InversionOfZero";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidParams: return "InvalidParams";
    case ErrorCode::kEmptySecret: return "EmptySecret";
    case ErrorCode::kThresholdNotMet: return "ThresholdNotMet";
    case ErrorCode::kInconsistentParams: return "InconsistentParams";
    case ErrorCode::kDuplicatePoints: return "DuplicatePoints";
    case ErrorCode::kMixedOwnerPoints: return "MixedOwnerPoints";
    case ErrorCode::kInvalidPublicKey: return "InvalidPublicKey";
    case ErrorCode::kAuthFailure: return "AuthFailure";
    case ErrorCode::kUnknownDestination: return "UnknownDestination";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kInvalidDegree: return "InvalidDegree";
    case ErrorCode::kDoubleTermination: return "DoubleTermination";
    case ErrorCode::kMalformedMessage: return "MalformedMessage";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above so
// callers (and tests) can branch on the kind without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace secagg_sim

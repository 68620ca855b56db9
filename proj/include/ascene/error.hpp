// Copyright (c) 2026 The ascene Authors. All Rights Reserved.
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

namespace ascene {

/// Error categories. The CLI maps each category onto its own exit code.
enum class ErrorKind {
  kConfig,   // bad configuration, flags or hyperparameters
  kData,     // missing or malformed input files, shape mismatches
  kNumeric,  // NaN/Inf, divergence, degenerate statistics
};

/// Fine-grained cause, used where callers need to tell failures apart
/// (e.g. the WAV reader).
enum class ErrorCode {
  kGeneric,
  kFileNotFound,
  kMalformedHeader,
  kUnsupportedEncoding,
  kShapeMismatch,
  kInvalidArgument,
  kNonFinite,
  kDegenerate,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, ErrorCode code, const std::string& what)
      : std::runtime_error(what), kind_(kind), code_(code) {}

  ErrorKind kind() const noexcept { return kind_; }
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  ErrorCode code_;
};

[[noreturn]] inline void ThrowConfig(const std::string& what) {
  throw Error(ErrorKind::kConfig, ErrorCode::kInvalidArgument, what);
}

[[noreturn]] inline void ThrowData(const std::string& what,
                                   ErrorCode code = ErrorCode::kGeneric) {
  throw Error(ErrorKind::kData, code, what);
}

[[noreturn]] inline void ThrowShape(const std::string& what) {
  throw Error(ErrorKind::kData, ErrorCode::kShapeMismatch, what);
}

[[noreturn]] inline void ThrowNumeric(const std::string& what,
                                      ErrorCode code = ErrorCode::kNonFinite) {
  throw Error(ErrorKind::kNumeric, code, what);
}

}  // namespace ascene

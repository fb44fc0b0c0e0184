// Copyright 2026 The harness-distill Authors.
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

namespace hsd {

enum class ErrorCode {
  kInvalidArgument,
  kConfig,
  kNumeric,
  kInvalidToken,
  kBudgetExceeded,
  kProgram,
  kIo,
  kSerialization,
  kPrecondition,
};

const char* error_code_name(ErrorCode code);

/// Base of every exception thrown by the library. The C API maps `code()`
/// onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& w) : Error(ErrorCode::kInvalidArgument, w) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& w) : Error(ErrorCode::kConfig, w) {}
};

class NumericFailure : public Error {
 public:
  explicit NumericFailure(const std::string& w) : Error(ErrorCode::kNumeric, w) {}
};

class InvalidToken : public Error {
 public:
  explicit InvalidToken(const std::string& w) : Error(ErrorCode::kInvalidToken, w) {}
};

class ProgramError : public Error {
 public:
  explicit ProgramError(const std::string& w) : Error(ErrorCode::kProgram, w) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& w) : Error(ErrorCode::kIo, w) {}
};

class SerializationError : public Error {
 public:
  explicit SerializationError(const std::string& w) : Error(ErrorCode::kSerialization, w) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& w) : Error(ErrorCode::kPrecondition, w) {}
};

}  // namespace hsd

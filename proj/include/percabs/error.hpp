// Copyright 2026 The percabs Authors
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

namespace percabs {

/// Every failure the library reports. The numeric value doubles as the CLI
/// exit code, so existing values must never be renumbered.
enum class ErrorCode : int {
  Usage = 2,
  Config = 3,
  Io = 4,
  RowSum = 10,
  DanglingSuccessor = 11,
  NoActions = 12,
  IntervalOrder = 13,
  InfeasibleRow = 14,
  StateSetMismatch = 15,
  DuplicateEntry = 16,
  NonConvergence = 20,
  TooLarge = 21,
  Domain = 30,
  DegenerateData = 31,
  SingularInformation = 32,
  DimensionMismatch = 33,
  DimensionUnsupported = 34,
  TooFewPoints = 35,
  MissingTruth = 40,
  OutOfBounds = 41,
  MissingPerceptionAction = 42,
  Grid = 50,
};

std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  int exit_code() const noexcept { return static_cast<int>(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace percabs

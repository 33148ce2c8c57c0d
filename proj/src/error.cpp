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

#include "percabs/error.hpp"

namespace percabs {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Usage: return "UsageError";
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::RowSum: return "RowSumError";
    case ErrorCode::DanglingSuccessor: return "DanglingSuccessor";
    case ErrorCode::NoActions: return "NoActions";
    case ErrorCode::IntervalOrder: return "IntervalOrderError";
    case ErrorCode::InfeasibleRow: return "InfeasibleRow";
    case ErrorCode::StateSetMismatch: return "StateSetMismatch";
    case ErrorCode::DuplicateEntry: return "DuplicateEntry";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::Domain: return "DomainError";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::SingularInformation: return "SingularInformation";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DimensionUnsupported: return "DimensionUnsupported";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::MissingTruth: return "MissingTruth";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::MissingPerceptionAction: return "MissingPerceptionAction";
    case ErrorCode::Grid: return "GridError";
  }
  return "Error";
}

}  // namespace percabs

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

#include <cstdint>
#include <iosfwd>
#include <string>

#include "percabs/aebs.hpp"

namespace percabs {

/// Everything an experiment needs besides the command-line choices. Stored as
/// `key = value` lines; see configs/aebs_default.cfg for every key.
struct ExperimentConfig {
  aebs::AebsConfig aebs;
  aebs::SyntheticPerception perception;
  aebs::GridSpec grid;
  /// Outer bounds of the perception bins (distance, m).
  double bins_lower = 0.0;
  double bins_upper = 60.0;
  double bin_width = 10.0;
  /// Distance range the dataset is sampled from.
  double dataset_lower = 0.0;
  double dataset_upper = 60.0;
  std::uint64_t dataset_size = 100'000;
  std::uint64_t mc_trials = 100'000;
  double alpha_mc = 0.05;
  double w_pe = 1.0;
};

ExperimentConfig default_experiment_config();

/// Starts from the defaults and applies every line. Unknown keys and
/// malformed values raise ConfigError naming `source` and the line.
ExperimentConfig parse_config(std::istream& in, const std::string& source);
ExperimentConfig load_config(const std::string& path);

void write_config(std::ostream& out, const ExperimentConfig& cfg);

}  // namespace percabs

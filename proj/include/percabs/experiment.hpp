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
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "percabs/abstraction.hpp"
#include "percabs/aebs.hpp"
#include "percabs/checker.hpp"
#include "percabs/config.hpp"

namespace percabs {

struct VerifyOptions {
  abstraction::Method method = abstraction::Method::Ours;
  double alpha_mc = 0.05;
  double w_pe = 1.0;
  /// Equal-width bins of this size, unless `bin_count` asks for equal-count.
  double bin_width = 10.0;
  std::optional<std::size_t> bin_count;
};

struct VerifyOutcome {
  checker::SafetyInterval safety;
  abstraction::PerceptionModel perception;
  std::size_t product_states = 0;
  std::size_t product_rows = 0;
  std::size_t product_edges = 0;
  std::optional<markov::Imdp> product;
};

/// Controller-plant abstraction built once per configuration, then combined
/// with any number of perception models.
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig cfg);

  const ExperimentConfig& config() const { return cfg_; }
  const aebs::ControllerPlantModel& controller_plant() const { return mcpl_; }

  abstraction::BinPartition partition(const PerceptionDataset& data, const VerifyOptions& opt) const;
  abstraction::PerceptionModel perception_model(const PerceptionDataset& data, const VerifyOptions& opt) const;
  markov::Imdp product(const abstraction::PerceptionModel& pm) const;
  VerifyOutcome verify(const PerceptionDataset& data, const VerifyOptions& opt, bool keep_product = false) const;

  PerceptionDataset generate_dataset(std::uint64_t seed) const;
  aebs::McResult monte_carlo(std::uint64_t trials, std::uint64_t seed) const;

 private:
  ExperimentConfig cfg_;
  aebs::ControllerPlantModel mcpl_;
};

nlohmann::json verify_report(const Pipeline& p, const VerifyOptions& opt, const VerifyOutcome& out);

enum class SweepKind { BinWidth, Enlargement };

SweepKind parse_sweep_kind(const std::string& name);

struct SweepRequest {
  SweepKind kind = SweepKind::BinWidth;
  std::vector<double> values;
  std::uint64_t trials = 100'000;
  std::uint64_t seed = 1;
  double alpha_mc = 0.05;
  /// Fixed enlargement weight for bin-width sweeps.
  double w_pe = 1.0;
  /// Fixed bin width for enlargement sweeps.
  double bin_width = 10.0;
};

struct SweepRow {
  double value = 0.0;
  abstraction::Method method = abstraction::Method::Ours;
  double p_min = 0.0;
  double p_max = 0.0;
  double mc_est = 0.0;
  double mc_lo = 0.0;
  double mc_hi = 0.0;
  double runtime_ms = 0.0;
  /// Error name when this point failed; the row then marks where results stop.
  std::string failure;
};

struct SweepOutput {
  std::vector<SweepRow> rows;
  std::vector<std::string> warnings;
  aebs::McResult mc;
  bool failed = false;
  int exit_code = 0;
};

/// Methods evaluated at every point of a sweep of the given kind.
std::vector<abstraction::Method> sweep_methods(SweepKind kind);

/// Runs every (value, method) pair on one shared dataset and one shared Monte
/// Carlo baseline. Rows are handed to `on_row` as soon as they exist. On the
/// first failure a marker row is emitted and the sweep stops.
SweepOutput run_sweep(const Pipeline& p, const SweepRequest& req, const PerceptionDataset& data,
                      const std::function<void(const SweepRow&)>& on_row = {});

inline constexpr const char* kSweepHeader = "sweep_value,method,p_min,p_max,mc_est,mc_lo,mc_hi,runtime_ms";

/// One CSV line (no newline). `timing` false writes runtime_ms as 0 so that
/// repeated runs give identical bytes.
std::string format_sweep_row(const SweepRow& row, bool timing);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace percabs

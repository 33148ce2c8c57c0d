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

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "percabs/dataset.hpp"
#include "percabs/markov.hpp"
#include "percabs/stats.hpp"

namespace percabs::abstraction {

using stats::Box;

/// Axis-aligned grid of perception bins. Bins are half-open [e_i, e_{i+1})
/// per axis, except the last bin on each axis, which also holds its upper
/// edge. Bin indices are row-major with the last axis varying fastest.
struct BinPartition {
  std::vector<std::vector<double>> edges;
  std::vector<std::string> warnings;

  std::size_t dim() const { return edges.size(); }
  std::size_t num_bins() const;
  std::vector<std::size_t> shape() const;
  Box bounds() const;
  Box bin(std::size_t index) const;
  std::optional<std::size_t> locate(const std::vector<double>& x) const;
};

BinPartition partition_from_edges(std::vector<std::vector<double>> edges);
BinPartition partition_equal_width(const Box& bounds, const std::vector<double>& widths);

/// 1-D only. Outer edges come from `bounds` when given, otherwise from the
/// data range.
BinPartition partition_equal_count(const PerceptionDataset& data, const std::vector<std::size_t>& counts,
                                   const std::optional<Box>& bounds = std::nullopt);

struct BinCounts {
  std::vector<stats::BinomialSample> samples;
  std::size_t out_of_bounds = 0;
};

BinCounts bin_empirical_probs(const PerceptionDataset& data, const BinPartition& partition);

enum class Method { NoCI, GTPer, LogRegCI, OursNPE, Ours };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

struct AbstractionConfig {
  Method method = Method::Ours;
  double alpha_mc = 0.05;
  double w_pe = 1.0;
  BinPartition partition;
};

struct BinRecord {
  double lo = 0.0;
  double hi = 1.0;
  std::uint64_t n = 0;
  std::uint64_t k = 0;
  /// Interval before enlargement (equal to [lo, hi] for methods without it).
  double raw_lo = 0.0;
  double raw_hi = 1.0;
  /// Unscaled enlargement; zero for methods that do not use it.
  double delta = 0.0;
  bool flagged = false;
};

struct PerceptionModel {
  BinPartition partition;
  Method method = Method::Ours;
  double alpha_mc = 0.05;
  double w_pe = 1.0;
  std::vector<BinRecord> bins;
  std::size_t out_of_bounds = 0;

  nlohmann::json to_json() const;
};

/// `truth` is the analytic detection model; required for GTPer only.
PerceptionModel build_perception_model(const PerceptionDataset& data, const std::optional<stats::LogisticModel>& truth,
                                       const AbstractionConfig& cfg);

struct CellInterval {
  std::size_t bin = 0;
  double lo = 0.0;
  double hi = 1.0;
};

/// Intervals of every bin overlapping the cell with positive volume. Axes on
/// which the cell is a single point use the bin that point belongs to.
std::vector<CellInterval> detection_intervals_for_cell(const PerceptionModel& pm, const Box& cell);

/// Perception-space box of a controller-plant state; empty for absorbing
/// states, which are copied through unchanged.
using CellOf = std::function<std::optional<Box>(markov::StateId)>;

/// Attaches detection intervals to a controller-plant MDP whose actions carry
/// a perception part (0 = no detection, 1 = detection) and a reachability
/// part. Each state gets one action per (overlapping bin, detect row,
/// no-detect row) triple, numbered through the reachability part.
markov::Imdp compose_closed_loop(const markov::Mdp& mcpl, const PerceptionModel& pm, const CellOf& cell_of);

}  // namespace percabs::abstraction

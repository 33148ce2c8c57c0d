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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "percabs/markov.hpp"

namespace percabs::checker {

using markov::ActionLabel;
using markov::Imdp;
using markov::StateId;

inline constexpr std::uint64_t kIterationCap = 1'000'000;

struct ReachQuery {
  const Imdp* model = nullptr;
  std::string target_label;
  /// Number of steps; unbounded when empty.
  std::optional<std::uint64_t> horizon;
  double tolerance = 1e-9;
};

struct SafetyInterval {
  double p_min = 0.0;
  double p_max = 0.0;
  std::uint64_t iterations = 0;
  bool converged = true;
};

enum class Mode { Min, Max };

/// Per-state extremal reachability values for one mode.
struct ValueResult {
  std::vector<double> values;
  std::uint64_t iterations = 0;
  bool converged = true;
};

/// Extremal probability of reaching `target_label` over all schedulers and all
/// interval resolutions. Acyclic models (over hi > 0 edges) are solved by one
/// backward pass; otherwise Jacobi value iteration from below runs until the
/// sup-norm change drops under the tolerance or the horizon is used up.
ValueResult reach_values(const ReachQuery& q, Mode mode);

SafetyInterval reach_interval(const ReachQuery& q);

/// [1 - max reach(bad), 1 - min reach(bad)].
SafetyInterval safety_interval(const Imdp& model, const std::string& bad_label);

/// Distribution inside the row's intervals that extremizes the expected value
/// of `values`: every successor starts at its lower bound and the remaining
/// mass is poured greedily into successors ordered by value (descending for
/// Max, ascending for Min), ties broken by state id.
std::vector<double> extremal_distribution(std::span<const markov::IntervalTransition> edges,
                                          std::span<const double> values, Mode mode);

struct Witness {
  std::map<StateId, ActionLabel> scheduler;
  /// Concrete distribution over each row's listed successors, in edge order.
  std::map<std::pair<StateId, ActionLabel>, std::vector<double>> adversary;
};

/// Scheduler and adversary attaining the bound reported by reach_values.
/// States without a real choice (targets, states that cannot reach the target,
/// single-action states with point rows) are still listed when they have more
/// than one action.
Witness extract_witness(const ReachQuery& q, Mode mode);

/// Reachability probability of the Markov chain induced by a witness, one
/// entry per state. Exact on acyclic chains, Gauss-Seidel to 1e-14 otherwise.
std::vector<double> evaluate_witness(const Imdp& model, const std::string& target_label, const Witness& w);

/// Independent oracle: enumerates every memoryless scheduler together with
/// every vertex of every chosen row's interval polytope and solves each induced
/// chain by Gaussian elimination. Limited to 8 states, 3 actions per state and
/// 4 successors per row; throws TooLarge beyond that or when the number of
/// combinations exceeds `max_combinations`.
SafetyInterval brute_force_reach(const Imdp& model, const std::string& target_label,
                                 std::uint64_t max_combinations = 20'000'000);

}  // namespace percabs::checker

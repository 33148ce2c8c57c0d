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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace percabs::markov {

/// Row-sum tolerance shared by every validator.
inline constexpr double kProbabilityTolerance = 1e-9;

struct StateId {
  std::uint32_t index = 0;

  friend auto operator<=>(const StateId&, const StateId&) = default;
};

/// Action of a controller-plant model: a perception output (0 = no detection,
/// 1 = detection), a reachability choice, or both. Plain models use whichever
/// part they need.
struct ActionLabel {
  std::optional<int> per;
  std::optional<std::uint32_t> reach;

  static ActionLabel perception(int a) { return {a, std::nullopt}; }
  static ActionLabel reachability(std::uint32_t r) { return {std::nullopt, r}; }
  static ActionLabel pair(int a, std::uint32_t r) { return {a, r}; }

  friend auto operator<=>(const ActionLabel&, const ActionLabel&) = default;
};

std::string to_string(const ActionLabel& a);

struct Transition {
  StateId to;
  double prob = 0.0;
};

struct IntervalTransition {
  StateId to;
  double lo = 0.0;
  double hi = 0.0;
};

template <typename EdgeT>
struct BasicRow {
  StateId state;
  ActionLabel action;
  std::vector<EdgeT> edges;
};

using Labels = std::vector<std::set<std::string>>;

/// Finite labeled transition system. Rows are kept sorted by (state, action)
/// and edges by successor, so two equal models serialize identically.
/// Instances are immutable once constructed; construction validates.
template <typename EdgeT>
class BasicModel {
 public:
  using Edge = EdgeT;
  using Row = BasicRow<EdgeT>;

  /// Validates and normalizes ordering. Throws percabs::Error on any
  /// violated invariant. An empty `labels` means "no labels anywhere".
  BasicModel(std::size_t num_states, StateId initial, std::vector<Row> rows, Labels labels = {});

  std::size_t num_states() const { return labels_.size(); }
  StateId initial() const { return initial_; }
  std::span<const Row> rows() const { return rows_; }
  std::span<const Row> rows_of(StateId s) const {
    return std::span<const Row>(rows_).subspan(offsets_[s.index], offsets_[s.index + 1] - offsets_[s.index]);
  }
  const std::set<std::string>& labels(StateId s) const { return labels_[s.index]; }
  const Labels& all_labels() const { return labels_; }
  bool has_label(StateId s, std::string_view label) const;
  std::vector<StateId> states_with_label(std::string_view label) const;

  /// Every row at `s` is a probability-one self-loop.
  bool is_terminal(StateId s) const;

  /// Actions occurring anywhere in the model.
  std::set<ActionLabel> alphabet() const;

  std::size_t num_edges() const;

 private:
  StateId initial_;
  std::vector<Row> rows_;
  std::vector<std::size_t> offsets_;
  Labels labels_;
};

using Mdp = BasicModel<Transition>;
using Imdp = BasicModel<IntervalTransition>;

extern template class BasicModel<Transition>;
extern template class BasicModel<IntervalTransition>;

Mdp make_mdp(std::size_t num_states, StateId initial, std::vector<Mdp::Row> rows, Labels labels = {});
Imdp make_imdp(std::size_t num_states, StateId initial, std::vector<Imdp::Row> rows, Labels labels = {});

/// Lifts every probability p to the point interval [p, p].
Imdp degenerate(const Mdp& m);

/// Product model plus, for every product state, the pair of component states
/// it came from. Only states reachable from the joint initial state are kept.
template <typename ModelT>
struct Composition {
  ModelT model;
  std::vector<std::pair<StateId, StateId>> origin;
};

/// Synchronous on actions present in both alphabets, interleaving otherwise.
Composition<Mdp> compose(const Mdp& m1, const Mdp& m2);

/// Same rule with interval arithmetic: shared edges become
/// [p * lo, p * hi] clamped to [0, 1].
Composition<Imdp> compose(const Mdp& m1, const Imdp& m2);

struct Counterexample {
  StateId state;
  ActionLabel action;
  StateId successor;
  double probability = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct ImplementsVerdict {
  bool holds = true;
  std::optional<Counterexample> counterexample;
  std::string reason;
};

/// State-matched satisfaction: labels agree everywhere and every MDP action is
/// matched by one IMDP action whose intervals contain all of its
/// probabilities at once.
ImplementsVerdict implements_state_matched(const Mdp& m, const Imdp& im);

}  // namespace percabs::markov

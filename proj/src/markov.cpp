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

#include "percabs/markov.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>

#include "percabs/error.hpp"

namespace percabs::markov {

namespace {

constexpr double kContainmentSlack = 1e-12;

std::string describe(StateId s, const ActionLabel& a) {
  std::ostringstream os;
  os << "state " << s.index << " action " << to_string(a);
  return os.str();
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

StateId target_of(const Transition& e) { return e.to; }
StateId target_of(const IntervalTransition& e) { return e.to; }

bool structurally_present(const Transition& e) { return e.prob > 0.0; }
bool structurally_present(const IntervalTransition& e) { return e.hi > 0.0; }

void check_row(const BasicRow<Transition>& row) {
  double sum = 0.0;
  for (const auto& e : row.edges) {
    if (!(e.prob >= 0.0 && e.prob <= 1.0 + kProbabilityTolerance)) {
      fail(ErrorCode::Domain, describe(row.state, row.action) + ": probability " + std::to_string(e.prob) +
                                  " outside [0,1]");
    }
    sum += e.prob;
  }
  if (std::abs(sum - 1.0) > kProbabilityTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << describe(row.state, row.action) << ": probabilities sum to " << sum;
    fail(ErrorCode::RowSum, os.str());
  }
}

void check_row(const BasicRow<IntervalTransition>& row) {
  double lo_sum = 0.0;
  double hi_sum = 0.0;
  for (const auto& e : row.edges) {
    if (!(e.lo >= 0.0 && e.hi <= 1.0 + kProbabilityTolerance)) {
      fail(ErrorCode::Domain, describe(row.state, row.action) + ": interval outside [0,1]");
    }
    if (e.lo > e.hi) {
      std::ostringstream os;
      os << describe(row.state, row.action) << ": lower bound " << e.lo << " exceeds upper bound " << e.hi
         << " towards state " << e.to.index;
      fail(ErrorCode::IntervalOrder, os.str());
    }
    lo_sum += e.lo;
    hi_sum += e.hi;
  }
  if (lo_sum > 1.0 + kProbabilityTolerance || hi_sum < 1.0 - kProbabilityTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << describe(row.state, row.action) << ": no distribution fits (sum lo = " << lo_sum
       << ", sum hi = " << hi_sum << ")";
    fail(ErrorCode::InfeasibleRow, os.str());
  }
}

}  // namespace

std::string to_string(const ActionLabel& a) {
  std::ostringstream os;
  os << '(';
  if (a.per) {
    os << "per=" << *a.per;
  } else {
    os << "per=-";
  }
  os << ',';
  if (a.reach) {
    os << "reach=" << *a.reach;
  } else {
    os << "reach=-";
  }
  os << ')';
  return os.str();
}

template <typename EdgeT>
BasicModel<EdgeT>::BasicModel(std::size_t num_states, StateId initial, std::vector<Row> rows, Labels labels)
    : initial_(initial), rows_(std::move(rows)), labels_(std::move(labels)) {
  if (num_states == 0) fail(ErrorCode::Domain, "model needs at least one state");
  if (labels_.empty()) labels_.resize(num_states);
  if (labels_.size() != num_states) {
    fail(ErrorCode::Domain, "label table has " + std::to_string(labels_.size()) + " entries for " +
                                std::to_string(num_states) + " states");
  }
  if (initial_.index >= num_states) {
    fail(ErrorCode::DanglingSuccessor, "initial state " + std::to_string(initial_.index) + " out of range");
  }

  for (auto& row : rows_) {
    if (!row.action.per && !row.action.reach) {
      fail(ErrorCode::Domain, "state " + std::to_string(row.state.index) + ": empty action label");
    }
    if (row.state.index >= num_states) {
      fail(ErrorCode::DanglingSuccessor, "row for unknown state " + std::to_string(row.state.index));
    }
    for (const auto& e : row.edges) {
      if (target_of(e).index >= num_states) {
        fail(ErrorCode::DanglingSuccessor,
             describe(row.state, row.action) + ": successor " + std::to_string(target_of(e).index) + " out of range");
      }
    }
    check_row(row);
    std::erase_if(row.edges, [](const EdgeT& e) { return !structurally_present(e); });
    std::sort(row.edges.begin(), row.edges.end(),
              [](const EdgeT& a, const EdgeT& b) { return target_of(a) < target_of(b); });
    auto dup = std::adjacent_find(row.edges.begin(), row.edges.end(),
                                  [](const EdgeT& a, const EdgeT& b) { return target_of(a) == target_of(b); });
    if (dup != row.edges.end()) {
      fail(ErrorCode::DuplicateEntry,
           describe(row.state, row.action) + ": successor " + std::to_string(target_of(*dup).index) + " listed twice");
    }
  }

  std::sort(rows_.begin(), rows_.end(), [](const Row& a, const Row& b) {
    return std::tie(a.state, a.action) < std::tie(b.state, b.action);
  });
  auto dup = std::adjacent_find(rows_.begin(), rows_.end(), [](const Row& a, const Row& b) {
    return a.state == b.state && a.action == b.action;
  });
  if (dup != rows_.end()) fail(ErrorCode::DuplicateEntry, describe(dup->state, dup->action) + " defined twice");

  offsets_.assign(num_states + 1, 0);
  for (const auto& row : rows_) ++offsets_[row.state.index + 1];
  for (std::size_t s = 0; s < num_states; ++s) {
    if (offsets_[s + 1] == 0) fail(ErrorCode::NoActions, "state " + std::to_string(s) + " has no actions");
    offsets_[s + 1] += offsets_[s];
  }
}

template <typename EdgeT>
bool BasicModel<EdgeT>::has_label(StateId s, std::string_view label) const {
  const auto& set = labels_[s.index];
  return set.find(std::string(label)) != set.end();
}

template <typename EdgeT>
std::vector<StateId> BasicModel<EdgeT>::states_with_label(std::string_view label) const {
  std::vector<StateId> out;
  for (std::uint32_t s = 0; s < labels_.size(); ++s) {
    if (has_label(StateId{s}, label)) out.push_back(StateId{s});
  }
  return out;
}

template <typename EdgeT>
bool BasicModel<EdgeT>::is_terminal(StateId s) const {
  for (const auto& row : rows_of(s)) {
    if (row.edges.size() != 1 || target_of(row.edges.front()) != s) return false;
  }
  return true;
}

template <typename EdgeT>
std::set<ActionLabel> BasicModel<EdgeT>::alphabet() const {
  std::set<ActionLabel> out;
  for (const auto& row : rows_) out.insert(row.action);
  return out;
}

template <typename EdgeT>
std::size_t BasicModel<EdgeT>::num_edges() const {
  std::size_t n = 0;
  for (const auto& row : rows_) n += row.edges.size();
  return n;
}

template class BasicModel<Transition>;
template class BasicModel<IntervalTransition>;

Mdp make_mdp(std::size_t num_states, StateId initial, std::vector<Mdp::Row> rows, Labels labels) {
  return Mdp(num_states, initial, std::move(rows), std::move(labels));
}

Imdp make_imdp(std::size_t num_states, StateId initial, std::vector<Imdp::Row> rows, Labels labels) {
  return Imdp(num_states, initial, std::move(rows), std::move(labels));
}

Imdp degenerate(const Mdp& m) {
  std::vector<Imdp::Row> rows;
  rows.reserve(m.rows().size());
  for (const auto& row : m.rows()) {
    Imdp::Row out{row.state, row.action, {}};
    out.edges.reserve(row.edges.size());
    for (const auto& e : row.edges) out.edges.push_back({e.to, e.prob, e.prob});
    rows.push_back(std::move(out));
  }
  return Imdp(m.num_states(), m.initial(), std::move(rows), m.all_labels());
}

namespace {

// Shared product construction. `Combine` turns (edge of m1 or none, edge of m2
// or none) into an edge of the product.
template <typename Out, typename M2, typename Combine>
Composition<BasicModel<Out>> product(const Mdp& m1, const M2& m2, Combine combine) {
  using Pair = std::pair<StateId, StateId>;
  const auto alpha1 = m1.alphabet();
  const auto alpha2 = m2.alphabet();

  std::map<Pair, StateId> index;
  std::vector<Pair> origin;
  std::deque<Pair> frontier;
  auto intern = [&](const Pair& p) {
    auto [it, inserted] = index.try_emplace(p, StateId{static_cast<std::uint32_t>(origin.size())});
    if (inserted) {
      origin.push_back(p);
      frontier.push_back(p);
    }
    return it->second;
  };

  using OutRow = BasicRow<Out>;
  std::vector<OutRow> rows;
  intern({m1.initial(), m2.initial()});
  while (!frontier.empty()) {
    const auto [s1, s2] = frontier.front();
    frontier.pop_front();
    const StateId here = index.at({s1, s2});

    const auto rows1 = m1.rows_of(s1);
    const auto rows2 = m2.rows_of(s2);
    std::set<ActionLabel> enabled;
    for (const auto& r : rows1) enabled.insert(r.action);
    for (const auto& r : rows2) enabled.insert(r.action);

    for (const auto& a : enabled) {
      auto find = [&a](auto rows) -> decltype(&rows.front()) {
        for (const auto& r : rows) {
          if (r.action == a) return &r;
        }
        return nullptr;
      };
      const auto* r1 = find(rows1);
      const auto* r2 = find(rows2);
      const bool in1 = alpha1.count(a) > 0;
      const bool in2 = alpha2.count(a) > 0;

      // Accumulate by successor pair; a map keeps the output ordered.
      std::map<Pair, Out> edges;
      if (in1 && in2) {
        if (r1 == nullptr || r2 == nullptr) continue;  // must synchronize
        for (const auto& e1 : r1->edges) {
          for (const auto& e2 : r2->edges) edges.emplace(Pair{e1.to, e2.to}, combine(&e1, &e2));
        }
      } else if (in1) {
        for (const auto& e1 : r1->edges) {
          edges.emplace(Pair{e1.to, s2}, combine(&e1, static_cast<const typename M2::Edge*>(nullptr)));
        }
      } else {
        for (const auto& e2 : r2->edges) {
          edges.emplace(Pair{s1, e2.to}, combine(static_cast<const Transition*>(nullptr), &e2));
        }
      }

      OutRow row{here, a, {}};
      row.edges.reserve(edges.size());
      for (auto& [succ, edge] : edges) {
        edge.to = intern(succ);
        row.edges.push_back(edge);
      }
      rows.push_back(std::move(row));
    }
  }

  Labels labels(origin.size());
  for (std::size_t i = 0; i < origin.size(); ++i) {
    labels[i] = m1.labels(origin[i].first);
    const auto& l2 = m2.labels(origin[i].second);
    labels[i].insert(l2.begin(), l2.end());
  }
  return {BasicModel<Out>(origin.size(), StateId{0}, std::move(rows), std::move(labels)), std::move(origin)};
}

}  // namespace

Composition<Mdp> compose(const Mdp& m1, const Mdp& m2) {
  return product<Transition>(m1, m2, [](const Transition* e1, const Transition* e2) {
    Transition t;
    t.prob = (e1 ? e1->prob : 1.0) * (e2 ? e2->prob : 1.0);
    return t;
  });
}

Composition<Imdp> compose(const Mdp& m1, const Imdp& m2) {
  return product<IntervalTransition>(m1, m2, [](const Transition* e1, const IntervalTransition* e2) {
    IntervalTransition t;
    const double p = e1 ? e1->prob : 1.0;
    t.lo = clamp01(p * (e2 ? e2->lo : 1.0));
    t.hi = clamp01(p * (e2 ? e2->hi : 1.0));
    return t;
  });
}

ImplementsVerdict implements_state_matched(const Mdp& m, const Imdp& im) {
  if (m.num_states() != im.num_states()) {
    fail(ErrorCode::StateSetMismatch, "MDP has " + std::to_string(m.num_states()) + " states, IMDP has " +
                                          std::to_string(im.num_states()));
  }
  for (std::uint32_t i = 0; i < m.num_states(); ++i) {
    const StateId s{i};
    if (m.labels(s) != im.labels(s)) {
      return {false, std::nullopt, "labels differ at state " + std::to_string(i)};
    }
    const auto candidates = im.rows_of(s);
    for (const auto& row : m.rows_of(s)) {
      std::optional<Counterexample> first_violation;
      bool matched = false;
      for (const auto& cand : candidates) {
        // Walk both sorted edge lists; anything missing counts as 0 / [0, 0].
        std::optional<Counterexample> violation;
        std::size_t a = 0;
        std::size_t b = 0;
        while (!violation && (a < row.edges.size() || b < cand.edges.size())) {
          const bool take_a = a < row.edges.size() && (b >= cand.edges.size() || row.edges[a].to <= cand.edges[b].to);
          const bool take_b = b < cand.edges.size() && (a >= row.edges.size() || cand.edges[b].to <= row.edges[a].to);
          const StateId succ = take_a ? row.edges[a].to : cand.edges[b].to;
          const double p = take_a ? row.edges[a].prob : 0.0;
          const double lo = take_b ? cand.edges[b].lo : 0.0;
          const double hi = take_b ? cand.edges[b].hi : 0.0;
          if (p < lo - kContainmentSlack || p > hi + kContainmentSlack) {
            violation = Counterexample{s, row.action, succ, p, lo, hi};
          }
          if (take_a) ++a;
          if (take_b) ++b;
        }
        if (!violation) {
          matched = true;
          break;
        }
        if (!first_violation) first_violation = violation;
      }
      if (!matched) {
        if (!first_violation) {
          const auto& e = row.edges.front();
          first_violation = Counterexample{s, row.action, e.to, e.prob, 0.0, 0.0};
        }
        std::ostringstream os;
        os << "probability " << first_violation->probability << " of " << describe(s, row.action) << " towards "
           << first_violation->successor.index << " lies outside [" << first_violation->lo << ", "
           << first_violation->hi << "]";
        return {false, first_violation, os.str()};
      }
    }
  }
  return {};
}

}  // namespace percabs::markov

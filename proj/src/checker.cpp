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

#include "percabs/checker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "percabs/error.hpp"

namespace percabs::checker {

namespace {

using markov::IntervalTransition;

std::vector<char> target_mask(const Imdp& m, const std::string& label) {
  std::vector<char> mask(m.num_states(), 0);
  for (auto s : m.states_with_label(label)) mask[s.index] = 1;
  return mask;
}

// States with a path of hi > 0 edges into the target set.
std::vector<char> can_reach(const Imdp& m, const std::vector<char>& target) {
  const std::size_t n = m.num_states();
  std::vector<std::vector<std::uint32_t>> preds(n);
  for (const auto& row : m.rows()) {
    if (target[row.state.index]) continue;
    for (const auto& e : row.edges) preds[e.to.index].push_back(row.state.index);
  }
  std::vector<char> seen(target);
  std::vector<std::uint32_t> stack;
  for (std::uint32_t s = 0; s < n; ++s) {
    if (target[s]) stack.push_back(s);
  }
  while (!stack.empty()) {
    const auto s = stack.back();
    stack.pop_back();
    for (auto p : preds[s]) {
      if (!seen[p]) {
        seen[p] = 1;
        stack.push_back(p);
      }
    }
  }
  return seen;
}

// Topological order (successors first) of the states marked `live`, following
// edges between live states. Empty optional when a cycle exists.
std::optional<std::vector<std::uint32_t>> reverse_topological(const Imdp& m, const std::vector<char>& live) {
  const std::size_t n = m.num_states();
  std::vector<std::uint32_t> out_degree(n, 0);
  std::vector<std::vector<std::uint32_t>> preds(n);
  for (std::uint32_t s = 0; s < n; ++s) {
    if (!live[s]) continue;
    std::vector<std::uint32_t> succ;
    for (const auto& row : m.rows_of(StateId{s})) {
      for (const auto& e : row.edges) {
        if (live[e.to.index]) succ.push_back(e.to.index);
      }
    }
    std::sort(succ.begin(), succ.end());
    succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
    out_degree[s] = static_cast<std::uint32_t>(succ.size());
    for (auto t : succ) preds[t].push_back(s);
  }
  std::vector<std::uint32_t> order;
  std::vector<std::uint32_t> ready;
  std::size_t live_count = 0;
  for (std::uint32_t s = 0; s < n; ++s) {
    if (!live[s]) continue;
    ++live_count;
    if (out_degree[s] == 0) ready.push_back(s);
  }
  while (!ready.empty()) {
    const auto s = ready.back();
    ready.pop_back();
    order.push_back(s);
    for (auto p : preds[s]) {
      if (--out_degree[p] == 0) ready.push_back(p);
    }
  }
  if (order.size() != live_count) return std::nullopt;
  return order;
}

double expectation(std::span<const IntervalTransition> edges, std::span<const double> dist,
                   std::span<const double> values) {
  double v = 0.0;
  for (std::size_t i = 0; i < edges.size(); ++i) v += dist[i] * values[edges[i].to.index];
  return v;
}

double optimal_row_value(const Imdp& m, StateId s, std::span<const double> values, Mode mode) {
  double best = mode == Mode::Max ? -1.0 : 2.0;
  for (const auto& row : m.rows_of(s)) {
    const auto dist = extremal_distribution(row.edges, values, mode);
    const double v = expectation(row.edges, dist, values);
    best = mode == Mode::Max ? std::max(best, v) : std::min(best, v);
  }
  return std::clamp(best, 0.0, 1.0);
}

const Imdp& model_of(const ReachQuery& q) {
  if (q.model == nullptr) fail(ErrorCode::Domain, "reachability query without a model");
  if (!(q.tolerance > 0.0)) fail(ErrorCode::Domain, "tolerance must be positive");
  return *q.model;
}

}  // namespace

std::vector<double> extremal_distribution(std::span<const IntervalTransition> edges, std::span<const double> values,
                                          Mode mode) {
  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double va = values[edges[a].to.index];
    const double vb = values[edges[b].to.index];
    if (va != vb) return mode == Mode::Max ? va > vb : va < vb;
    return edges[a].to < edges[b].to;
  });
  std::vector<double> dist(edges.size());
  double remaining = 1.0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    dist[i] = edges[i].lo;
    remaining -= edges[i].lo;
  }
  for (auto i : order) {
    if (remaining <= 0.0) break;
    const double add = std::min(edges[i].hi - edges[i].lo, remaining);
    dist[i] += add;
    remaining -= add;
  }
  return dist;
}

ValueResult reach_values(const ReachQuery& q, Mode mode) {
  const Imdp& m = model_of(q);
  const std::size_t n = m.num_states();
  const auto target = target_mask(m, q.target_label);
  const auto reach = can_reach(m, target);

  ValueResult result;
  result.values.assign(n, 0.0);
  std::vector<char> live(n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    if (target[s]) result.values[s] = 1.0;
    live[s] = reach[s] && !target[s];
  }

  if (!q.horizon) {
    if (auto order = reverse_topological(m, live)) {
      for (auto s : *order) result.values[s] = optimal_row_value(m, StateId{s}, result.values, mode);
      result.iterations = 1;
      return result;
    }
  }

  const std::uint64_t cap = q.horizon ? *q.horizon : kIterationCap;
  std::vector<double> next = result.values;
  double previous = 0.0;
  for (std::uint64_t it = 0; it < cap; ++it) {
    double delta = 0.0;
    for (std::uint32_t s = 0; s < n; ++s) {
      if (!live[s]) continue;
      next[s] = optimal_row_value(m, StateId{s}, result.values, mode);
      delta = std::max(delta, std::abs(next[s] - result.values[s]));
    }
    result.values.swap(next);
    result.iterations = it + 1;
    if (!q.horizon && delta < q.tolerance) {
      // A small step is not a small error when the iteration mixes slowly:
      // estimate the contraction from consecutive steps and bound the tail.
      if (delta == 0.0) return result;
      const double rate = previous > 0.0 ? delta / previous : 1.0;
      if (rate < 1.0 && delta * rate / (1.0 - rate) < q.tolerance) return result;
    }
    previous = delta;
  }
  if (q.horizon) return result;
  result.converged = false;
  fail(ErrorCode::NonConvergence,
       "value iteration did not reach tolerance within " + std::to_string(kIterationCap) + " sweeps");
}

SafetyInterval reach_interval(const ReachQuery& q) {
  const auto lo = reach_values(q, Mode::Min);
  const auto hi = reach_values(q, Mode::Max);
  const auto init = model_of(q).initial().index;
  SafetyInterval out;
  out.p_min = std::clamp(lo.values[init], 0.0, 1.0);
  out.p_max = std::clamp(hi.values[init], 0.0, 1.0);
  out.p_min = std::min(out.p_min, out.p_max);
  out.iterations = std::max(lo.iterations, hi.iterations);
  out.converged = lo.converged && hi.converged;
  return out;
}

SafetyInterval safety_interval(const Imdp& model, const std::string& bad_label) {
  ReachQuery q{&model, bad_label, std::nullopt, 1e-9};
  const auto reach = reach_interval(q);
  SafetyInterval out = reach;
  out.p_min = 1.0 - reach.p_max;
  out.p_max = 1.0 - reach.p_min;
  return out;
}

Witness extract_witness(const ReachQuery& q, Mode mode) {
  const Imdp& m = model_of(q);
  if (q.horizon) fail(ErrorCode::Domain, "witnesses are memoryless and need an unbounded query");
  const auto values = reach_values(q, mode).values;
  const std::size_t n = m.num_states();
  const auto target = target_mask(m, q.target_label);
  const double slack = std::max(10.0 * q.tolerance, 1e-12);

  Witness w;
  std::vector<std::vector<double>> dists;
  auto row_dist = [&](const Imdp::Row& row) { return extremal_distribution(row.edges, values, mode); };

  std::vector<char> assigned(n, 0);
  for (std::uint32_t s = 0; s < n; ++s) {
    if (target[s]) assigned[s] = 1;
  }
  auto choose = [&](StateId s, const Imdp::Row& row) {
    w.scheduler[s] = row.action;
    w.adversary[{s, row.action}] = row_dist(row);
    assigned[s.index] = 1;
  };

  if (mode == Mode::Min) {
    for (std::uint32_t s = 0; s < n; ++s) {
      if (assigned[s]) continue;
      const Imdp::Row* best = nullptr;
      double best_value = 2.0;
      for (const auto& row : m.rows_of(StateId{s})) {
        const double v = expectation(row.edges, row_dist(row), values);
        if (v < best_value) {
          best_value = v;
          best = &row;
        }
      }
      choose(StateId{s}, *best);
    }
  } else {
    // Max: restrict to value-optimal actions, then grow an attractor from the
    // target so the chosen actions keep making progress instead of idling in a
    // cycle that merely preserves the value.
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::uint32_t s = 0; s < n; ++s) {
        if (assigned[s] || values[s] <= 0.0) continue;
        for (const auto& row : m.rows_of(StateId{s})) {
          const auto dist = row_dist(row);
          if (expectation(row.edges, dist, values) < values[s] - slack) continue;
          bool progresses = false;
          for (std::size_t i = 0; i < row.edges.size(); ++i) {
            if (dist[i] > 0.0 && assigned[row.edges[i].to.index]) progresses = true;
          }
          if (progresses) {
            choose(StateId{s}, row);
            changed = true;
            break;
          }
        }
      }
    }
    for (std::uint32_t s = 0; s < n; ++s) {
      if (assigned[s]) continue;
      const Imdp::Row* best = nullptr;
      double best_value = -1.0;
      for (const auto& row : m.rows_of(StateId{s})) {
        const double v = expectation(row.edges, row_dist(row), values);
        if (v > best_value) {
          best_value = v;
          best = &row;
        }
      }
      choose(StateId{s}, *best);
    }
  }

  // Targets are absorbing for the query; their rows carry no choice.
  for (std::uint32_t s = 0; s < n; ++s) {
    if (!target[s]) continue;
    w.scheduler.erase(StateId{s});
  }
  // A lone action is not a choice either.
  for (auto it = w.scheduler.begin(); it != w.scheduler.end();) {
    if (m.rows_of(it->first).size() == 1 && m.rows_of(it->first).front().edges.size() <= 1) {
      w.adversary.erase({it->first, it->second});
      it = w.scheduler.erase(it);
    } else {
      ++it;
    }
  }
  return w;
}

std::vector<double> evaluate_witness(const Imdp& m, const std::string& target_label, const Witness& w) {
  const std::size_t n = m.num_states();
  const auto target = target_mask(m, target_label);

  // Induced chain: successor list per state.
  std::vector<std::vector<std::pair<std::uint32_t, double>>> chain(n);
  for (std::uint32_t s = 0; s < n; ++s) {
    if (target[s]) continue;
    const StateId id{s};
    const auto rows = m.rows_of(id);
    const Imdp::Row* row = &rows.front();
    std::vector<double> dist;
    if (auto it = w.scheduler.find(id); it != w.scheduler.end()) {
      for (const auto& r : rows) {
        if (r.action == it->second) row = &r;
      }
      dist = w.adversary.at({id, row->action});
    } else {
      // Unlisted states have exactly one row with at most one successor.
      dist.assign(row->edges.size(), 1.0);
    }
    for (std::size_t i = 0; i < row->edges.size(); ++i) {
      if (dist[i] > 0.0) chain[s].push_back({row->edges[i].to.index, dist[i]});
    }
  }

  std::vector<double> x(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) x[s] = target[s] ? 1.0 : 0.0;
  for (int sweep = 0; sweep < 10'000'000; ++sweep) {
    double delta = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      if (target[s]) continue;
      double v = 0.0;
      for (const auto& [t, p] : chain[s]) v += p * x[t];
      delta = std::max(delta, std::abs(v - x[s]));
      x[s] = v;
    }
    if (delta < 1e-14) break;
  }
  return x;
}

namespace {

// Vertices of {lo <= x <= hi, sum x = 1}: one greedy fill per successor order.
std::vector<std::vector<double>> polytope_vertices(std::span<const IntervalTransition> edges) {
  std::vector<std::size_t> perm(edges.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<double>> out;
  do {
    std::vector<double> dist(edges.size());
    double remaining = 1.0;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      dist[i] = edges[i].lo;
      remaining -= edges[i].lo;
    }
    for (auto i : perm) {
      const double add = std::max(0.0, std::min(edges[i].hi - edges[i].lo, remaining));
      dist[i] += add;
      remaining -= add;
    }
    const bool seen = std::any_of(out.begin(), out.end(), [&](const std::vector<double>& v) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (std::abs(v[i] - dist[i]) > 1e-15) return false;
      }
      return true;
    });
    if (!seen) out.push_back(std::move(dist));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

// Solves the absorption probabilities of a small chain by Gaussian elimination
// with partial pivoting. `p` is dense row-major n x n.
std::vector<double> solve_chain(const std::vector<double>& p, const std::vector<char>& target, std::size_t n) {
  // States that reach the target with positive probability in this chain.
  std::vector<char> good(target);
  bool grew = true;
  while (grew) {
    grew = false;
    for (std::size_t s = 0; s < n; ++s) {
      if (good[s]) continue;
      for (std::size_t t = 0; t < n; ++t) {
        if (p[s * n + t] > 0.0 && good[t]) {
          good[s] = 1;
          grew = true;
          break;
        }
      }
    }
  }
  std::vector<std::size_t> unknown;
  for (std::size_t s = 0; s < n; ++s) {
    if (good[s] && !target[s]) unknown.push_back(s);
  }
  const std::size_t k = unknown.size();
  std::vector<double> a(k * (k + 1), 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t s = unknown[i];
    a[i * (k + 1) + i] = 1.0;
    double rhs = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      if (target[t]) rhs += p[s * n + t];
    }
    for (std::size_t j = 0; j < k; ++j) a[i * (k + 1) + j] -= p[s * n + unknown[j]];
    a[i * (k + 1) + k] = rhs;
  }
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < k; ++r) {
      if (std::abs(a[r * (k + 1) + c]) > std::abs(a[piv * (k + 1) + c])) piv = r;
    }
    for (std::size_t j = 0; j <= k; ++j) std::swap(a[c * (k + 1) + j], a[piv * (k + 1) + j]);
    const double d = a[c * (k + 1) + c];
    for (std::size_t r = 0; r < k; ++r) {
      if (r == c) continue;
      const double f = a[r * (k + 1) + c] / d;
      if (f == 0.0) continue;
      for (std::size_t j = c; j <= k; ++j) a[r * (k + 1) + j] -= f * a[c * (k + 1) + j];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    if (target[s]) x[s] = 1.0;
  }
  for (std::size_t i = 0; i < k; ++i) x[unknown[i]] = a[i * (k + 1) + k] / a[i * (k + 1) + i];
  return x;
}

}  // namespace

SafetyInterval brute_force_reach(const Imdp& m, const std::string& target_label, std::uint64_t max_combinations) {
  const std::size_t n = m.num_states();
  if (n > 8) fail(ErrorCode::TooLarge, "brute force handles at most 8 states");
  const auto target = target_mask(m, target_label);
  const auto reach = can_reach(m, target);

  struct Option {
    const Imdp::Row* row;
    std::vector<double> dist;
  };
  std::vector<std::vector<Option>> options(n);
  std::vector<std::size_t> choice_states;
  std::uint64_t combos = 1;
  for (std::uint32_t s = 0; s < n; ++s) {
    const auto rows = m.rows_of(StateId{s});
    if (rows.size() > 3) fail(ErrorCode::TooLarge, "brute force handles at most 3 actions per state");
    for (const auto& row : rows) {
      if (row.edges.size() > 4) fail(ErrorCode::TooLarge, "brute force handles at most 4 successors per row");
    }
    if (target[s] || !reach[s]) continue;
    for (const auto& row : rows) {
      for (auto& v : polytope_vertices(row.edges)) options[s].push_back({&row, std::move(v)});
    }
    choice_states.push_back(s);
    combos *= options[s].size();
    if (combos > max_combinations) fail(ErrorCode::TooLarge, "too many scheduler/vertex combinations");
  }

  std::vector<std::size_t> pick(n, 0);
  std::vector<double> p(n * n, 0.0);
  double best_min = 2.0;
  double best_max = -1.0;
  const auto init = m.initial().index;
  for (std::uint64_t c = 0; c < combos; ++c) {
    std::fill(p.begin(), p.end(), 0.0);
    for (auto s : choice_states) {
      const auto& opt = options[s][pick[s]];
      for (std::size_t i = 0; i < opt.row->edges.size(); ++i) p[s * n + opt.row->edges[i].to.index] += opt.dist[i];
    }
    const auto x = solve_chain(p, target, n);
    best_min = std::min(best_min, x[init]);
    best_max = std::max(best_max, x[init]);
    for (auto s : choice_states) {
      if (++pick[s] < options[s].size()) break;
      pick[s] = 0;
    }
  }
  SafetyInterval out;
  out.p_min = std::clamp(best_min, 0.0, 1.0);
  out.p_max = std::clamp(best_max, 0.0, 1.0);
  out.iterations = combos;
  return out;
}

}  // namespace percabs::checker

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

#include "percabs/aebs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "percabs/error.hpp"

namespace percabs::aebs {

using markov::ActionLabel;
using markov::Mdp;
using markov::StateId;

void AebsConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::Config, what);
  };
  need(tau > 0.0, "tau must be positive");
  need(a_max > 0.0, "a_max must be positive");
  need(B1 > 0.0 && B1 < B2, "braking powers need 0 < B1 < B2");
  need(B2 == a_max, "B2 must equal a_max");
  need(T_h > 0.0, "T_h must be positive");
  need(T_s >= 0.0, "T_s must be nonnegative");
  need(u_fric > 0.0, "u_fric must be positive");
  need(L > 0.0, "L must be positive");
  need(v0 >= 0.0, "v0 must be nonnegative");
}

stats::LogisticModel SyntheticPerception::as_logistic() const {
  stats::LogisticModel m;
  m.weights = {k};
  m.intercept = -k * x0;
  return m;
}

double detection_probability(const CarState& s, const SyntheticPerception& p) {
  return stats::sigmoid(p.k * (s.d - p.x0));
}

DetectionFn detector(const SyntheticPerception& p) {
  return [p](const CarState& s) { return detection_probability(s, p); };
}

DetectionFn constant_detector(double p) {
  return [p](const CarState&) { return p; };
}

bool collided(double d, const AebsConfig& cfg) { return d <= cfg.L + kGridTolerance; }

CarState dynamics_step(const CarState& s, double b, const AebsConfig& cfg) {
  CarState next{s.d - cfg.tau * s.v, s.v - cfg.tau * b};
  if (next.v <= kStopSpeed) next.v = 0.0;
  return next;
}

double braking_command(const CarState& s, bool detected, const AebsConfig& cfg) {
  if (!detected || s.v <= 0.0) return 0.0;
  const double ttc = s.d / s.v;
  const double d_br = s.v * cfg.T_s + cfg.u_fric * s.v * s.v / (2.0 * cfg.a_max);
  const double wi = (s.d - d_br) / (s.v * cfg.T_h);
  const int crossed = (ttc <= cfg.C2 ? 1 : 0) + (wi <= cfg.C1 ? 1 : 0);
  return crossed == 0 ? 0.0 : crossed == 1 ? cfg.B1 : cfg.B2;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(master) ^ stream) + index);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Trace simulate_trace(const AebsConfig& cfg, const DetectionFn& p, std::uint64_t seed, bool record) {
  std::mt19937_64 rng(seed);
  Trace trace;
  CarState s{cfg.d0, cfg.v0};
  constexpr std::uint64_t kMaxSteps = 100'000'000;
  for (std::uint64_t t = 0;; ++t) {
    if (collided(s.d, cfg)) {
      trace.outcome = Outcome::Collision;
      break;
    }
    if (s.v <= 0.0) {
      trace.outcome = Outcome::Safe;
      break;
    }
    if (t >= kMaxSteps) fail(ErrorCode::Domain, "trace exceeded the step limit");
    const bool detected = uniform01(rng) < p(s);
    const double b = braking_command(s, detected, cfg);
    if (record) trace.rows.push_back({t, s.d, s.v, detected, b});
    s = dynamics_step(s, b, cfg);
  }
  trace.final_state = s;
  return trace;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  const auto old = out.precision(17);
  out << "t,d,v,detected,b\n";
  for (const auto& r : trace.rows) {
    out << r.t << ',' << r.d << ',' << r.v << ',' << (r.detected ? 1 : 0) << ',' << r.b << '\n';
  }
  out.precision(old);
}

McResult monte_carlo_safety(const AebsConfig& cfg, const DetectionFn& p, std::uint64_t n_trials, std::uint64_t seed) {
  if (n_trials == 0) fail(ErrorCode::Domain, "Monte Carlo needs at least one trial");
  McResult r;
  r.trials = n_trials;
  for (std::uint64_t i = 0; i < n_trials; ++i) {
    const auto trace = simulate_trace(cfg, p, derive_seed(seed, kTrialStream, i), false);
    if (trace.outcome == Outcome::Safe) ++r.safe;
  }
  r.estimate = static_cast<double>(r.safe) / static_cast<double>(n_trials);
  r.ci = stats::clopper_pearson({r.safe, n_trials}, 0.05);
  return r;
}

PerceptionDataset generate_dataset(const DetectionFn& p, std::uint64_t n_points, double lower, double upper,
                                   std::uint64_t seed) {
  if (!(upper >= lower)) fail(ErrorCode::Domain, "sampling range must satisfy lower <= upper");
  std::mt19937_64 rng(derive_seed(seed, kDatasetStream, 0));
  PerceptionDataset data;
  data.dim = 1;
  data.x.reserve(n_points);
  data.z.reserve(n_points);
  for (std::uint64_t i = 0; i < n_points; ++i) {
    const double d = lower + (upper - lower) * uniform01(rng);
    const bool z = uniform01(rng) < p(CarState{d, 0.0});
    data.add({d}, z);
  }
  return data;
}

// Grid -------------------------------------------------------------------

std::size_t Axis::num_atoms() const {
  const std::size_t m = edges.size();
  return mode == AxisMode::Points ? 2 * m - 1 : m - 1;
}

Axis::Atom Axis::atom(std::size_t i) const {
  if (mode == AxisMode::Points) {
    if (i % 2 == 0) return {edges[i / 2], edges[i / 2], false, false};
    return {edges[i / 2], edges[i / 2 + 1], true, true};
  }
  return {edges[i], edges[i + 1], i != 0, false};
}

std::optional<std::size_t> Axis::locate(double x) const {
  const std::size_t m = edges.size();
  if (x < edges.front() - kGridTolerance || x > edges.back() + kGridTolerance) return std::nullopt;
  const auto i = static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), x - kGridTolerance) -
                                          edges.begin());
  const bool on_edge = i < m && edges[i] <= x + kGridTolerance;
  if (mode == AxisMode::Points) return on_edge ? 2 * i : 2 * i - 1;
  if (on_edge) return i == 0 ? 0 : i - 1;
  return i - 1;
}

std::vector<std::size_t> Axis::overlapping(double lo, double hi) const {
  std::vector<std::size_t> out;
  if (hi < edges.front() - kGridTolerance || lo > edges.back() + kGridTolerance || lo > hi) return out;
  const auto a = locate(std::max(lo, edges.front()));
  const auto b = locate(std::min(hi, edges.back()));
  for (std::size_t i = *a; i <= *b; ++i) out.push_back(i);
  return out;
}

Axis uniform_axis(AxisMode mode, double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi > lo)) fail(ErrorCode::Grid, "axis needs lo < hi and a positive step");
  Axis axis;
  axis.mode = mode;
  const auto count = static_cast<std::size_t>(std::llround((hi - lo) / step));
  if (std::abs(lo + static_cast<double>(count) * step - hi) > 1e-6 * step) {
    fail(ErrorCode::Grid, "axis extent must be a whole number of steps");
  }
  for (std::size_t i = 0; i < count; ++i) axis.edges.push_back(lo + static_cast<double>(i) * step);
  axis.edges.push_back(hi);
  return axis;
}

void GridSpec::validate(const AebsConfig& cfg) const {
  for (const Axis* axis : {&d, &v}) {
    if (axis->edges.size() < 2) fail(ErrorCode::Grid, "every grid axis needs at least two edges");
    for (std::size_t i = 0; i + 1 < axis->edges.size(); ++i) {
      if (!(axis->edges[i] + 2 * kGridTolerance < axis->edges[i + 1])) {
        fail(ErrorCode::Grid, "grid edges must be strictly increasing");
      }
    }
  }
  const bool l_on_edge = std::any_of(d.edges.begin(), d.edges.end(),
                                     [&](double e) { return std::abs(e - cfg.L) <= kGridTolerance; });
  if (!l_on_edge) fail(ErrorCode::Grid, "the collision distance L must be a grid edge");
  if (std::abs(v.edges.front()) > kGridTolerance) fail(ErrorCode::Grid, "the speed axis must start at 0");
  if (cfg.d0 > d.edges.back() + kGridTolerance) fail(ErrorCode::Grid, "the distance axis must cover d0");
  if (cfg.v0 > v.edges.back() + kGridTolerance) fail(ErrorCode::Grid, "the speed axis must cover v0");
}

// Controller-plant abstraction --------------------------------------------

std::vector<double> attainable_commands(double d_lo, double d_hi, double v_lo, double v_hi, bool detected,
                                        const AebsConfig& cfg) {
  if (!detected) return {0.0};
  std::set<double> out;
  if (v_lo <= 0.0) out.insert(0.0);
  if (v_hi <= 0.0) return {out.begin(), out.end()};
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto wi = [&](double d, double v) {
    if (v <= 0.0) return inf;
    const double d_br = v * cfg.T_s + cfg.u_fric * v * v / (2.0 * cfg.a_max);
    return (d - d_br) / (v * cfg.T_h);
  };
  // TTC rises with d and falls with v; so does WI on d > 0.
  const double ttc_min = d_lo / v_hi;
  const double ttc_max = v_lo > 0.0 ? d_hi / v_lo : inf;
  const double wi_min = wi(d_lo, v_hi);
  const double wi_max = wi(d_hi, v_lo);
  auto slack = [](double c) { return 1e-9 * std::max(1.0, std::abs(c)); };
  std::vector<int> ttc_opts;
  if (ttc_min <= cfg.C2 + slack(cfg.C2)) ttc_opts.push_back(1);
  if (ttc_max > cfg.C2 - slack(cfg.C2)) ttc_opts.push_back(0);
  std::vector<int> wi_opts;
  if (wi_min <= cfg.C1 + slack(cfg.C1)) wi_opts.push_back(1);
  if (wi_max > cfg.C1 - slack(cfg.C1)) wi_opts.push_back(0);
  const double levels[] = {0.0, cfg.B1, cfg.B2};
  for (int a : ttc_opts) {
    for (int b : wi_opts) out.insert(levels[a + b]);
  }
  return {out.begin(), out.end()};
}

stats::Box ControllerPlantModel::cell_box(StateId s) const {
  const auto& c = cells.at(s.index);
  if (!c) fail(ErrorCode::Domain, "absorbing states have no cell");
  const auto da = grid.d.atom(c->d_atom);
  const auto va = grid.v.atom(c->v_atom);
  return {{da.lo, va.lo}, {da.hi, va.hi}};
}

std::optional<stats::Box> ControllerPlantModel::perception_box(StateId s) const {
  const auto& c = cells.at(s.index);
  if (!c) return std::nullopt;
  const auto da = grid.d.atom(c->d_atom);
  return stats::Box{{da.lo}, {da.hi}};
}

std::optional<StateId> ControllerPlantModel::state_of(const CarState& s, const AebsConfig& cfg) const {
  if (collided(s.d, cfg)) return StateId{kCollision};
  if (s.v <= kStopSpeed) return StateId{kStopped};
  const auto da = grid.d.locate(s.d);
  const auto va = grid.v.locate(s.v);
  if (!da || !va) return std::nullopt;
  const auto it = index.find(static_cast<std::uint64_t>(*da) * grid.v.num_atoms() + *va);
  if (it == index.end()) return std::nullopt;
  return StateId{it->second};
}

ControllerPlantModel build_controller_plant_abstraction(const GridSpec& grid, const AebsConfig& cfg,
                                                        std::optional<double> disabled_command) {
  cfg.validate();
  grid.validate(cfg);
  struct {
    std::vector<std::optional<Cell>> cells{std::nullopt, std::nullopt};
    std::unordered_map<std::uint64_t, std::uint32_t> index;
  } out;
  const std::uint64_t nv = grid.v.num_atoms();

  std::deque<std::uint32_t> queue;
  auto intern = [&](std::size_t da, std::size_t va) {
    const std::uint64_t key = static_cast<std::uint64_t>(da) * nv + va;
    auto [it, inserted] = out.index.emplace(key, static_cast<std::uint32_t>(out.cells.size()));
    if (inserted) {
      out.cells.push_back(Cell{static_cast<std::uint32_t>(da), static_cast<std::uint32_t>(va)});
      queue.push_back(it->second);
    }
    return it->second;
  };

  StateId initial{ControllerPlantModel::kCollision};
  if (!collided(cfg.d0, cfg)) {
    if (cfg.v0 <= kStopSpeed) {
      initial = StateId{ControllerPlantModel::kStopped};
    } else {
      const auto da = grid.d.locate(cfg.d0);
      const auto va = grid.v.locate(cfg.v0);
      if (!da || !va) fail(ErrorCode::Grid, "initial state lies outside the grid");
      initial = StateId{intern(*da, *va)};
    }
  }

  std::vector<Mdp::Row> rows;
  for (std::uint32_t s : {ControllerPlantModel::kCollision, ControllerPlantModel::kStopped}) {
    rows.push_back({StateId{s}, ActionLabel::reachability(0), {{StateId{s}, 1.0}}});
  }

  while (!queue.empty()) {
    const std::uint32_t s = queue.front();
    queue.pop_front();
    const Cell cell = *out.cells[s];
    const auto da = grid.d.atom(cell.d_atom);
    const auto va = grid.v.atom(cell.v_atom);
    for (int per = 0; per <= 1; ++per) {
      std::set<std::uint32_t> successors;
      for (double b : attainable_commands(da.lo, da.hi, va.lo, va.hi, per == 1, cfg)) {
        if (disabled_command && b == *disabled_command) continue;
        const double d_lo = da.lo - cfg.tau * va.hi;
        const double d_hi = da.hi - cfg.tau * va.lo;
        double v_lo = va.lo - cfg.tau * b;
        double v_hi = va.hi - cfg.tau * b;
        if (v_lo <= kStopSpeed) v_lo = 0.0;
        if (v_hi <= kStopSpeed) v_hi = 0.0;
        if (collided(d_lo, cfg)) successors.insert(ControllerPlantModel::kCollision);
        const bool beyond_l = d_hi > cfg.L + kGridTolerance;
        if (v_lo == 0.0 && beyond_l) successors.insert(ControllerPlantModel::kStopped);
        if (!beyond_l || v_hi == 0.0) continue;
        if (d_hi > grid.d.edges.back() + kGridTolerance || v_hi > grid.v.edges.back() + kGridTolerance) {
          fail(ErrorCode::Grid, "a successor leaves the grid");
        }
        for (auto di : grid.d.overlapping(std::max(d_lo, cfg.L), d_hi)) {
          if (grid.d.atom(di).hi <= cfg.L + kGridTolerance) continue;
          for (auto vi : grid.v.overlapping(std::max(v_lo, 0.0), v_hi)) {
            if (grid.v.atom(vi).hi <= kStopSpeed) continue;
            successors.insert(intern(di, vi));
          }
        }
      }
      std::uint32_t r = 0;
      for (auto t : successors) rows.push_back({StateId{s}, ActionLabel::pair(per, r++), {{StateId{t}, 1.0}}});
    }
  }

  markov::Labels labels(out.cells.size());
  labels[ControllerPlantModel::kCollision] = {"bad", "collision"};
  labels[ControllerPlantModel::kStopped] = {"stopped"};
  Mdp mdp(out.cells.size(), initial, std::move(rows), std::move(labels));
  return ControllerPlantModel{std::move(mdp), std::move(out.cells), grid, std::move(out.index)};
}

ConservatismReport check_mcpl_conservative(const ControllerPlantModel& m, const AebsConfig& cfg,
                                           std::uint64_t n_samples, std::uint64_t seed) {
  ConservatismReport report;
  std::vector<std::uint32_t> cells;
  for (std::uint32_t s = 0; s < m.cells.size(); ++s) {
    if (m.cells[s]) cells.push_back(s);
  }
  if (n_samples == 0 || cells.empty()) return report;
  std::mt19937_64 rng(derive_seed(seed, kSampleStream, 0));
  auto sample_atom = [&](const Axis::Atom& a) {
    if (a.lo == a.hi) return a.lo;
    double u = 0.0;
    do {
      u = uniform01(rng);
    } while ((a.lo_open && u == 0.0));
    return a.lo + (a.hi - a.lo) * u;
  };
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    const std::uint32_t s = cells[rng() % cells.size()];
    const Cell c = *m.cells[s];
    const CarState x{sample_atom(m.grid.d.atom(c.d_atom)), sample_atom(m.grid.v.atom(c.v_atom))};
    ++report.samples;
    for (int per = 0; per <= 1; ++per) {
      const CarState next = dynamics_step(x, braking_command(x, per == 1, cfg), cfg);
      const auto target = m.state_of(next, cfg);
      bool covered = false;
      if (target) {
        for (const auto& row : m.mdp.rows_of(StateId{s})) {
          if (row.action.per != per) continue;
          for (const auto& e : row.edges) covered = covered || e.to == *target;
        }
      }
      ++report.checks;
      if (!covered) {
        ++report.violations;
        if (report.examples.size() < 5) {
          std::ostringstream msg;
          msg.precision(17);
          msg << "state " << s << " (d=" << x.d << ", v=" << x.v << ") per=" << per << " -> (d=" << next.d
              << ", v=" << next.v << ")";
          report.examples.push_back(msg.str());
        }
      }
    }
  }
  return report;
}

}  // namespace percabs::aebs

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
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "percabs/dataset.hpp"
#include "percabs/markov.hpp"
#include "percabs/stats.hpp"

namespace percabs::aebs {

/// Speeds at or below this are treated as a stopped car. Without it, float
/// residue after repeated braking leaves the car creeping forward forever.
inline constexpr double kStopSpeed = 1e-9;

/// Matching tolerance for grid edges and the collision distance.
inline constexpr double kGridTolerance = 1e-9;

struct CarState {
  double d = 0.0;
  double v = 0.0;
};

struct AebsConfig {
  double tau = 0.1;
  double a_max = 10.0;
  double B1 = 4.0;
  double B2 = 10.0;
  double C1 = 3.0137;
  double C2 = 6.0137;
  double T_h = 2.0;
  double T_s = 0.0;
  double u_fric = 1.0;
  double L = 5.0;
  double d0 = 50.0;
  double v0 = 20.0;

  void validate() const;
};

struct SyntheticPerception {
  double k = -0.1;
  double x0 = 35.0;

  /// The same curve as a logistic model over distance.
  stats::LogisticModel as_logistic() const;
};

/// Probability of detecting the obstacle in a given state.
using DetectionFn = std::function<double(const CarState&)>;

DetectionFn detector(const SyntheticPerception& p);
DetectionFn constant_detector(double p);

CarState dynamics_step(const CarState& s, double b, const AebsConfig& cfg);
double braking_command(const CarState& s, bool detected, const AebsConfig& cfg);
double detection_probability(const CarState& s, const SyntheticPerception& p);

/// d <= L, with distances within kGridTolerance of L counted as reaching it so
/// that rounding in d cannot decide the outcome.
bool collided(double d, const AebsConfig& cfg);

// Seeds ------------------------------------------------------------------

/// Seed for item `index` of stream `stream` under a master seed. Every random
/// draw in the library goes through this derivation.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

enum SeedStream : std::uint64_t { kTrialStream = 1, kDatasetStream = 2, kSampleStream = 3 };

/// Uniform double in [0, 1) with 53 random bits; portable across standard
/// libraries, unlike std::uniform_real_distribution.
double uniform01(std::mt19937_64& rng);

// Simulation -------------------------------------------------------------

enum class Outcome { Safe, Collision };

struct TraceRow {
  std::uint64_t t = 0;
  double d = 0.0;
  double v = 0.0;
  bool detected = false;
  double b = 0.0;
};

struct Trace {
  std::vector<TraceRow> rows;
  Outcome outcome = Outcome::Collision;
  CarState final_state;
};

Trace simulate_trace(const AebsConfig& cfg, const DetectionFn& p, std::uint64_t seed, bool record = true);
void write_trace_csv(std::ostream& out, const Trace& trace);

struct McResult {
  std::uint64_t trials = 0;
  std::uint64_t safe = 0;
  double estimate = 0.0;
  stats::ConfidenceInterval ci;
};

McResult monte_carlo_safety(const AebsConfig& cfg, const DetectionFn& p, std::uint64_t n_trials, std::uint64_t seed);

PerceptionDataset generate_dataset(const DetectionFn& p, std::uint64_t n_points, double lower, double upper,
                                   std::uint64_t seed);

// Controller-plant abstraction --------------------------------------------

/// How an axis is cut into cells. `Points` makes every edge a singleton cell
/// and every gap between neighbouring edges an open cell; `Intervals` uses
/// cells (e_i, e_{i+1}], with the first cell closed at e_0.
enum class AxisMode { Points, Intervals };

struct Axis {
  AxisMode mode = AxisMode::Points;
  std::vector<double> edges;

  std::size_t num_atoms() const;
  /// Closure of the atom, plus whether each end is excluded.
  struct Atom {
    double lo, hi;
    bool lo_open, hi_open;
  };
  Atom atom(std::size_t i) const;
  /// Atom containing x, with edges matched to within kGridTolerance.
  std::optional<std::size_t> locate(double x) const;
  /// Atoms meeting the closed range [lo, hi].
  std::vector<std::size_t> overlapping(double lo, double hi) const;
};

Axis uniform_axis(AxisMode mode, double lo, double hi, double step);

struct GridSpec {
  Axis d;
  Axis v;

  void validate(const AebsConfig& cfg) const;
};

struct Cell {
  std::uint32_t d_atom = 0;
  std::uint32_t v_atom = 0;
};

/// Controller-plant MDP plus the grid cell behind every non-absorbing state.
struct ControllerPlantModel {
  markov::Mdp mdp;
  std::vector<std::optional<Cell>> cells;
  GridSpec grid;
  /// (d_atom * num_v_atoms + v_atom) -> state index.
  std::unordered_map<std::uint64_t, std::uint32_t> index;

  static constexpr std::uint32_t kCollision = 0;
  static constexpr std::uint32_t kStopped = 1;

  stats::Box cell_box(markov::StateId s) const;
  /// Perception-space (distance only) box of a state; empty when absorbing.
  std::optional<stats::Box> perception_box(markov::StateId s) const;
  /// State a concrete car state falls into, if it is part of the model.
  std::optional<markov::StateId> state_of(const CarState& s, const AebsConfig& cfg) const;
};

/// Braking commands the controller can issue somewhere in the box for the
/// given perception output.
std::vector<double> attainable_commands(double d_lo, double d_hi, double v_lo, double v_hi, bool detected,
                                        const AebsConfig& cfg);

/// Grid abstraction over the cells reachable from (d0, v0). `disabled_command`
/// drops one braking power from every attainable set; it exists so tests can
/// show that the soundness check catches a broken abstraction.
ControllerPlantModel build_controller_plant_abstraction(const GridSpec& grid, const AebsConfig& cfg,
                                                        std::optional<double> disabled_command = std::nullopt);

struct ConservatismReport {
  std::uint64_t samples = 0;
  std::uint64_t checks = 0;
  std::uint64_t violations = 0;
  std::vector<std::string> examples;
};

ConservatismReport check_mcpl_conservative(const ControllerPlantModel& m, const AebsConfig& cfg,
                                           std::uint64_t n_samples, std::uint64_t seed);

}  // namespace percabs::aebs

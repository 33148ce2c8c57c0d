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

#include "percabs/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "percabs/error.hpp"

namespace percabs::abstraction {

using markov::ActionLabel;
using markov::Imdp;
using markov::IntervalTransition;
using markov::Mdp;
using markov::StateId;

namespace {

// Bin index on one axis under the half-open / last-closed rule.
std::optional<std::size_t> locate_axis(const std::vector<double>& e, double x) {
  if (!(x >= e.front() && x <= e.back())) return std::nullopt;
  if (x == e.back()) return e.size() - 2;
  const auto it = std::upper_bound(e.begin(), e.end(), x);
  return static_cast<std::size_t>(it - e.begin()) - 1;
}

}  // namespace

std::size_t BinPartition::num_bins() const {
  std::size_t n = 1;
  for (const auto& e : edges) n *= e.size() - 1;
  return n;
}

std::vector<std::size_t> BinPartition::shape() const {
  std::vector<std::size_t> s;
  for (const auto& e : edges) s.push_back(e.size() - 1);
  return s;
}

Box BinPartition::bounds() const {
  Box b;
  for (const auto& e : edges) {
    b.lower.push_back(e.front());
    b.upper.push_back(e.back());
  }
  return b;
}

Box BinPartition::bin(std::size_t index) const {
  Box b;
  b.lower.resize(dim());
  b.upper.resize(dim());
  for (std::size_t axis = dim(); axis-- > 0;) {
    const std::size_t count = edges[axis].size() - 1;
    const std::size_t i = index % count;
    index /= count;
    b.lower[axis] = edges[axis][i];
    b.upper[axis] = edges[axis][i + 1];
  }
  return b;
}

std::optional<std::size_t> BinPartition::locate(const std::vector<double>& x) const {
  if (x.size() != dim()) fail(ErrorCode::DimensionMismatch, "point and partition dimensions differ");
  std::size_t index = 0;
  for (std::size_t axis = 0; axis < dim(); ++axis) {
    const auto i = locate_axis(edges[axis], x[axis]);
    if (!i) return std::nullopt;
    index = index * (edges[axis].size() - 1) + *i;
  }
  return index;
}

BinPartition partition_from_edges(std::vector<std::vector<double>> edges) {
  if (edges.empty()) fail(ErrorCode::Domain, "partition needs at least one axis");
  for (const auto& e : edges) {
    if (e.size() < 2) fail(ErrorCode::Domain, "every axis needs at least one bin");
    for (std::size_t i = 0; i + 1 < e.size(); ++i) {
      if (!(e[i] < e[i + 1])) fail(ErrorCode::Domain, "bin edges must be strictly increasing");
    }
  }
  BinPartition p;
  p.edges = std::move(edges);
  return p;
}

BinPartition partition_equal_width(const Box& bounds, const std::vector<double>& widths) {
  if (bounds.lower.size() != widths.size() || bounds.upper.size() != widths.size()) {
    fail(ErrorCode::DimensionMismatch, "one width per bounds dimension is required");
  }
  std::vector<std::vector<double>> edges;
  for (std::size_t axis = 0; axis < widths.size(); ++axis) {
    const double lo = bounds.lower[axis];
    const double hi = bounds.upper[axis];
    const double w = widths[axis];
    if (!(hi > lo)) fail(ErrorCode::Domain, "bounds must have positive extent");
    if (!(w > 0.0) || w > (hi - lo) * (1.0 + 1e-12)) fail(ErrorCode::Domain, "bin width must lie in (0, extent]");
    // Bins that would be thinner than a rounding error merge into the last one.
    const auto count = static_cast<std::size_t>(std::max(1.0, std::ceil((hi - lo) / w - 1e-9)));
    std::vector<double> e;
    for (std::size_t i = 0; i < count; ++i) e.push_back(lo + static_cast<double>(i) * w);
    e.push_back(hi);
    edges.push_back(std::move(e));
  }
  return partition_from_edges(std::move(edges));
}

BinPartition partition_equal_count(const PerceptionDataset& data, const std::vector<std::size_t>& counts,
                                   const std::optional<Box>& bounds) {
  if (data.dim != 1 || counts.size() != 1) {
    fail(ErrorCode::DimensionUnsupported, "equal-count binning is implemented for one dimension only");
  }
  const std::size_t bins = counts[0];
  if (bins < 2) fail(ErrorCode::Domain, "equal-count binning needs at least two bins");
  std::vector<double> xs;
  xs.reserve(data.size());
  for (const auto& x : data.x) {
    if (bounds && !bounds->contains(x)) continue;
    xs.push_back(x[0]);
  }
  if (xs.size() < bins) fail(ErrorCode::TooFewPoints, "fewer points than requested bins");
  std::sort(xs.begin(), xs.end());

  const double lo = bounds ? bounds->lower[0] : xs.front();
  const double hi = bounds ? bounds->upper[0] : xs.back();
  BinPartition p;
  std::vector<double> e{lo};
  const std::size_t n = xs.size();
  std::size_t used = 0;
  bool merged = false;
  for (std::size_t b = 0; b + 1 < bins; ++b) {
    used += n / bins + (b < n % bins ? 1 : 0);
    const double edge = 0.5 * (xs[used - 1] + xs[used]);
    if (edge <= e.back() || edge >= hi) {
      merged = true;
      continue;
    }
    e.push_back(edge);
  }
  if (hi > e.back()) {
    e.push_back(hi);
  } else {
    merged = true;
  }
  if (e.size() < 2) {
    // Every point shares one value: a single zero-width bin cannot be
    // half-open, so widen it symmetrically.
    const double pad = std::max(1e-9, std::abs(lo) * 1e-9);
    e = {lo - pad, lo + pad};
  }
  if (merged) {
    p.warnings.push_back("duplicate values merged equal-count edges: " + std::to_string(e.size() - 1) + " of " +
                         std::to_string(bins) + " bins remain");
  }
  p.edges.push_back(std::move(e));
  return p;
}

BinCounts bin_empirical_probs(const PerceptionDataset& data, const BinPartition& partition) {
  if (data.dim != partition.dim()) fail(ErrorCode::DimensionMismatch, "dataset and partition dimensions differ");
  BinCounts out;
  out.samples.assign(partition.num_bins(), {});
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto b = partition.locate(data.x[i]);
    if (!b) {
      ++out.out_of_bounds;
      continue;
    }
    ++out.samples[*b].n;
    out.samples[*b].k += data.z[i];
  }
  return out;
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::NoCI: return "noCI";
    case Method::GTPer: return "GTPer";
    case Method::LogRegCI: return "logRegCI";
    case Method::OursNPE: return "oursNPE";
    case Method::Ours: return "ours";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (auto m : {Method::NoCI, Method::GTPer, Method::LogRegCI, Method::OursNPE, Method::Ours}) {
    if (to_string(m) == name) return m;
  }
  fail(ErrorCode::Usage, "unknown method '" + std::string(name) + "' (expected noCI, GTPer, logRegCI, oursNPE, ours)");
}

nlohmann::json PerceptionModel::to_json() const {
  nlohmann::json bins_json = nlohmann::json::array();
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const auto box = partition.bin(i);
    const auto& r = bins[i];
    bins_json.push_back({{"lower", box.lower},
                         {"upper", box.upper},
                         {"lo", r.lo},
                         {"hi", r.hi},
                         {"n", r.n},
                         {"k", r.k},
                         {"delta", r.delta},
                         {"flagged", r.flagged}});
  }
  return {{"bins", std::move(bins_json)},
          {"method", std::string(abstraction::to_string(method))},
          {"alpha_mc", alpha_mc},
          {"w_pe", w_pe},
          {"out_of_bounds", out_of_bounds}};
}

PerceptionModel build_perception_model(const PerceptionDataset& data, const std::optional<stats::LogisticModel>& truth,
                                       const AbstractionConfig& cfg) {
  if (!(cfg.alpha_mc > 0.0 && cfg.alpha_mc < 1.0)) fail(ErrorCode::Domain, "alpha_mc must lie in (0, 1)");
  if (!(cfg.w_pe >= 0.0 && cfg.w_pe <= 1.0)) fail(ErrorCode::Domain, "w_pe must lie in [0, 1]");
  if (cfg.method == Method::GTPer && !truth) fail(ErrorCode::MissingTruth, "GTPer needs the analytic detection model");

  PerceptionModel pm;
  pm.partition = cfg.partition;
  pm.method = cfg.method;
  pm.alpha_mc = cfg.alpha_mc;
  pm.w_pe = cfg.w_pe;
  const auto counts = bin_empirical_probs(data, cfg.partition);
  pm.out_of_bounds = counts.out_of_bounds;

  const std::size_t num_bins = cfg.partition.num_bins();
  const double alpha_bin = cfg.alpha_mc / static_cast<double>(num_bins);
  std::optional<stats::LogisticModel> surrogate;
  if (cfg.method == Method::Ours || cfg.method == Method::LogRegCI) surrogate = stats::fit_logistic(data);
  const double z = stats::normal_quantile(1.0 - cfg.alpha_mc / 2.0);

  pm.bins.resize(num_bins);
  for (std::size_t b = 0; b < num_bins; ++b) {
    auto& r = pm.bins[b];
    r.n = counts.samples[b].n;
    r.k = counts.samples[b].k;
    const auto box = cfg.partition.bin(b);
    if (cfg.method == Method::GTPer) {
      std::tie(r.lo, r.hi) = stats::logistic_range_over_box(*truth, box);
    } else if (r.n == 0) {
      r.lo = 0.0;
      r.hi = 1.0;
      r.flagged = true;
    } else {
      const double p_hat = static_cast<double>(r.k) / static_cast<double>(r.n);
      switch (cfg.method) {
        case Method::NoCI:
          r.lo = r.hi = p_hat;
          break;
        case Method::LogRegCI:
          std::tie(r.lo, r.hi) = stats::logistic_band_over_box(*surrogate, box, z);
          break;
        case Method::OursNPE:
        case Method::Ours: {
          const auto ci = stats::clopper_pearson(counts.samples[b], alpha_bin);
          r.lo = ci.lo;
          r.hi = ci.hi;
          if (cfg.method == Method::Ours) {
            const auto [lr_lo, lr_hi] = stats::logistic_range_over_box(*surrogate, box);
            r.delta = lr_hi - lr_lo;
          }
          break;
        }
        case Method::GTPer:
          break;
      }
    }
    r.raw_lo = r.lo;
    r.raw_hi = r.hi;
    if (r.delta > 0.0) {
      r.lo = std::max(0.0, r.lo - cfg.w_pe * r.delta);
      r.hi = std::min(1.0, r.hi + cfg.w_pe * r.delta);
    }
    r.lo = std::clamp(r.lo, 0.0, 1.0);
    r.hi = std::clamp(r.hi, r.lo, 1.0);
  }
  return pm;
}

std::vector<CellInterval> detection_intervals_for_cell(const PerceptionModel& pm, const Box& cell) {
  const auto& part = pm.partition;
  if (cell.lower.size() != part.dim() || cell.upper.size() != part.dim()) {
    fail(ErrorCode::DimensionMismatch, "cell and partition dimensions differ");
  }
  // Per axis, the bin indices the cell overlaps.
  std::vector<std::vector<std::size_t>> per_axis(part.dim());
  for (std::size_t axis = 0; axis < part.dim(); ++axis) {
    const auto& e = part.edges[axis];
    const double lo = cell.lower[axis];
    const double hi = cell.upper[axis];
    if (lo > hi || lo < e.front() || hi > e.back()) {
      fail(ErrorCode::OutOfBounds, "cell [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                       "] leaves the perception bounds");
    }
    if (lo == hi) {
      per_axis[axis].push_back(*locate_axis(e, lo));
      continue;
    }
    for (std::size_t i = 0; i + 1 < e.size(); ++i) {
      if (std::min(hi, e[i + 1]) - std::max(lo, e[i]) > 0.0) per_axis[axis].push_back(i);
    }
  }
  std::vector<CellInterval> out;
  std::vector<std::size_t> pick(part.dim(), 0);
  while (true) {
    std::size_t index = 0;
    for (std::size_t axis = 0; axis < part.dim(); ++axis) {
      index = index * (part.edges[axis].size() - 1) + per_axis[axis][pick[axis]];
    }
    out.push_back({index, pm.bins[index].lo, pm.bins[index].hi});
    std::size_t axis = part.dim();
    while (axis-- > 0) {
      if (++pick[axis] < per_axis[axis].size()) break;
      pick[axis] = 0;
    }
    if (axis == static_cast<std::size_t>(-1)) break;
  }
  std::sort(out.begin(), out.end(), [](const CellInterval& a, const CellInterval& b) { return a.bin < b.bin; });
  return out;
}

Imdp compose_closed_loop(const Mdp& mcpl, const PerceptionModel& pm, const CellOf& cell_of) {
  std::vector<Imdp::Row> rows;
  for (std::uint32_t s = 0; s < mcpl.num_states(); ++s) {
    const StateId id{s};
    const auto cell = cell_of(id);
    if (!cell) {
      for (const auto& row : mcpl.rows_of(id)) {
        Imdp::Row out{id, row.action, {}};
        for (const auto& e : row.edges) out.edges.push_back({e.to, e.prob, e.prob});
        rows.push_back(std::move(out));
      }
      continue;
    }
    std::vector<const Mdp::Row*> detect;
    std::vector<const Mdp::Row*> miss;
    for (const auto& row : mcpl.rows_of(id)) {
      if (row.action.per == 1) detect.push_back(&row);
      if (row.action.per == 0) miss.push_back(&row);
    }
    if (detect.empty() || miss.empty()) {
      fail(ErrorCode::MissingPerceptionAction,
           "state " + std::to_string(s) + " lacks a row for one of the perception actions");
    }
    std::uint32_t choice = 0;
    for (const auto& iv : detection_intervals_for_cell(pm, *cell)) {
      for (const auto* r1 : detect) {
        for (const auto* r0 : miss) {
          std::map<StateId, std::pair<double, double>> merged;
          for (const auto& e : r1->edges) {
            auto& [lo, hi] = merged[e.to];
            lo += e.prob * iv.lo;
            hi += e.prob * iv.hi;
          }
          for (const auto& e : r0->edges) {
            auto& [lo, hi] = merged[e.to];
            lo += e.prob * (1.0 - iv.hi);
            hi += e.prob * (1.0 - iv.lo);
          }
          Imdp::Row out{id, ActionLabel::reachability(choice++), {}};
          for (const auto& [to, bounds] : merged) {
            out.edges.push_back({to, std::clamp(bounds.first, 0.0, 1.0), std::clamp(bounds.second, 0.0, 1.0)});
          }
          rows.push_back(std::move(out));
        }
      }
    }
  }
  return Imdp(mcpl.num_states(), mcpl.initial(), std::move(rows), mcpl.all_labels());
}

}  // namespace percabs::abstraction

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

#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "percabs/abstraction.hpp"
#include "percabs/checker.hpp"
#include "percabs/error.hpp"

using namespace percabs;
using namespace percabs::abstraction;
using markov::ActionLabel;
using markov::Mdp;
using markov::StateId;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Usage;
}

PerceptionDataset points_1d(const std::vector<double>& xs, const std::vector<int>& zs) {
  PerceptionDataset d;
  d.dim = 1;
  for (std::size_t i = 0; i < xs.size(); ++i) d.add({xs[i]}, zs[i] != 0);
  return d;
}

const stats::LogisticModel kTruth{{-0.1}, 3.5, {}, 0, true};

PerceptionDataset sample_truth(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> ux(lo, hi), u01(0.0, 1.0);
  PerceptionDataset d;
  d.dim = 1;
  for (int i = 0; i < n; ++i) {
    const double x = ux(rng);
    d.add({x}, u01(rng) < kTruth.predict({x}));
  }
  return d;
}

PerceptionModel model_with(const BinPartition& part, std::vector<std::pair<double, double>> iv) {
  PerceptionModel pm;
  pm.partition = part;
  for (auto [lo, hi] : iv) pm.bins.push_back({lo, hi, 1, 0, lo, hi, 0.0, false});
  return pm;
}

}  // namespace

TEST_CASE("equal-width partitions") {
  const auto p = partition_equal_width({{0.0}, {10.0}}, {2.5});
  CHECK(p.num_bins() == 4);
  CHECK(p.edges[0] == std::vector<double>{0, 2.5, 5, 7.5, 10});
  CHECK(p.locate({2.5}) == 1u);
  CHECK(p.locate({10.0}) == 3u);
  CHECK(p.locate({10.5}) == std::nullopt);

  const auto q = partition_equal_width({{0.0}, {10.0}}, {3.0});
  CHECK(q.num_bins() == 4);
  CHECK(q.bin(3).lower[0] == 9.0);
  CHECK(q.bin(3).upper[0] == 10.0);

  const auto g = partition_equal_width({{0.0, 0.0}, {10.0, 20.0}}, {2.0, 5.0});
  CHECK(g.num_bins() == 5 * 4);
  CHECK(g.shape() == std::vector<std::size_t>{5, 4});
  CHECK(g.locate({3.0, 12.0}) == 1u * 4 + 2);

  CHECK(code_of([] { partition_equal_width({{0.0}, {10.0}}, {0.0}); }) == ErrorCode::Domain);
  CHECK(code_of([] { partition_equal_width({{0.0}, {10.0}}, {11.0}); }) == ErrorCode::Domain);
}

TEST_CASE("every in-bounds point lands in exactly one bin") {
  const auto p = partition_equal_width({{0.0, -5.0}, {7.0, 5.0}}, {1.5, 2.5});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(0.0, 7.0), uy(-5.0, 5.0);
  for (int i = 0; i < 2000; ++i) {
    const std::vector<double> x{ux(rng), uy(rng)};
    int hits = 0;
    for (std::size_t b = 0; b < p.num_bins(); ++b) {
      const auto box = p.bin(b);
      bool in = true;
      for (std::size_t a = 0; a < 2; ++a) {
        const bool last = box.upper[a] == p.edges[a].back();
        in = in && x[a] >= box.lower[a] && (x[a] < box.upper[a] || (last && x[a] == box.upper[a]));
      }
      hits += in;
      if (in) CHECK(p.locate(x) == b);
    }
    CHECK(hits == 1);
  }
}

TEST_CASE("equal-count partitions") {
  const auto eight = points_1d({1, 2, 3, 4, 5, 6, 7, 8}, {0, 0, 0, 0, 0, 0, 0, 0});
  const auto p = partition_equal_count(eight, {4});
  CHECK(p.edges[0] == std::vector<double>{1, 2.5, 4.5, 6.5, 8});
  for (auto s : bin_empirical_probs(eight, p).samples) CHECK(s.n == 2);

  const auto nine = points_1d({9, 1, 2, 3, 4, 5, 6, 7, 8}, std::vector<int>(9, 1));
  std::vector<std::uint64_t> sizes;
  for (auto s : bin_empirical_probs(nine, partition_equal_count(nine, {4})).samples) sizes.push_back(s.n);
  CHECK(sizes == std::vector<std::uint64_t>{3, 2, 2, 2});

  const auto same = points_1d({4, 4, 4, 4, 4}, {1, 0, 1, 0, 1});
  const auto m = partition_equal_count(same, {3});
  CHECK(m.num_bins() == 1);
  CHECK(m.warnings.size() == 1);
  CHECK(bin_empirical_probs(same, m).samples[0].n == 5);

  PerceptionDataset two_d;
  two_d.dim = 2;
  two_d.add({1, 2}, true);
  two_d.add({2, 3}, false);
  CHECK(code_of([&] { partition_equal_count(two_d, {2}); }) == ErrorCode::DimensionUnsupported);
  CHECK(code_of([&] { partition_equal_count(points_1d({1, 2}, {0, 1}), {3}); }) == ErrorCode::TooFewPoints);
}

TEST_CASE("empirical bin counts") {
  const auto p = partition_from_edges({{0, 1, 2, 3}});
  const auto d = points_1d({0.1, 0.2, 0.3, 0.4, 2.5, 3.5}, {1, 1, 0, 1, 0, 1});
  const auto c = bin_empirical_probs(d, p);
  CHECK(c.samples[0].k == 3);
  CHECK(c.samples[0].n == 4);
  CHECK(c.samples[1].n == 0);
  CHECK(c.samples[2].n == 1);
  CHECK(c.out_of_bounds == 1);

  const auto all = bin_empirical_probs(points_1d({2.1, 2.2, 3.0}, {1, 0, 1}), p);
  CHECK(all.samples[2].n == 3);
  CHECK(all.samples[2].k == 2);
}

TEST_CASE("zero-data bins are fully uncertain") {
  const auto p = partition_from_edges({{0, 1, 2}});
  const auto d = points_1d({0.5, 0.6, 0.7}, {1, 0, 1});
  for (auto method : {Method::NoCI, Method::OursNPE, Method::Ours, Method::LogRegCI}) {
    const auto pm = build_perception_model(d, std::nullopt, {method, 0.05, 1.0, p});
    CHECK(pm.bins[1].flagged);
    CHECK(pm.bins[1].lo == 0.0);
    CHECK(pm.bins[1].hi == 1.0);
    CHECK_FALSE(pm.bins[0].flagged);
  }
}

TEST_CASE("method names round-trip") {
  for (auto m : {Method::NoCI, Method::GTPer, Method::LogRegCI, Method::OursNPE, Method::Ours})
    CHECK(parse_method(to_string(m)) == m);
  CHECK(code_of([] { parse_method("best"); }) == ErrorCode::Usage);
}

TEST_CASE("per-method intervals") {
  std::mt19937_64 rng(4);
  const auto d = sample_truth(rng, 5000, 0.0, 60.0);
  const auto part = partition_equal_width({{0.0}, {60.0}}, {10.0});

  SUBCASE("no enlargement weight reduces to the plain interval") {
    const auto a = build_perception_model(d, std::nullopt, {Method::Ours, 0.05, 0.0, part});
    const auto b = build_perception_model(d, std::nullopt, {Method::OursNPE, 0.05, 1.0, part});
    for (std::size_t i = 0; i < part.num_bins(); ++i) {
      CHECK(a.bins[i].lo == b.bins[i].lo);
      CHECK(a.bins[i].hi == b.bins[i].hi);
    }
  }

  SUBCASE("ground truth takes the exact range") {
    const auto pm = build_perception_model(d, kTruth, {Method::GTPer, 0.05, 1.0, part});
    CHECK(pm.bins[3].lo == doctest::Approx(1.0 / (1.0 + std::exp(0.5))).epsilon(1e-12));
    CHECK(pm.bins[3].hi == doctest::Approx(1.0 / (1.0 + std::exp(-0.5))).epsilon(1e-12));
    CHECK(code_of([&] { build_perception_model(d, std::nullopt, {Method::GTPer, 0.05, 1.0, part}); }) ==
          ErrorCode::MissingTruth);
    std::uniform_real_distribution<double> ux(0.0, 60.0);
    for (int i = 0; i < 1000; ++i) {
      const double x = ux(rng);
      const auto& r = pm.bins[*part.locate({x})];
      CHECK(kTruth.predict({x}) >= r.lo - 1e-15);
      CHECK(kTruth.predict({x}) <= r.hi + 1e-15);
    }
  }

  SUBCASE("noCI is the point estimate") {
    const auto pm = build_perception_model(d, std::nullopt, {Method::NoCI, 0.05, 1.0, part});
    const auto counts = bin_empirical_probs(d, part);
    for (std::size_t i = 0; i < part.num_bins(); ++i) {
      CHECK(pm.bins[i].lo == double(counts.samples[i].k) / double(counts.samples[i].n));
      CHECK(pm.bins[i].hi == pm.bins[i].lo);
    }
  }

  SUBCASE("logRegCI is a band around the fitted surface") {
    const auto pm = build_perception_model(d, std::nullopt, {Method::LogRegCI, 0.05, 1.0, part});
    const auto fit = stats::fit_logistic(d);
    for (std::size_t i = 0; i < part.num_bins(); ++i) {
      const auto [lo, hi] = stats::logistic_range_over_box(fit, part.bin(i));
      CHECK(pm.bins[i].lo < lo);
      CHECK(pm.bins[i].hi > hi);
    }
  }
}

TEST_CASE("enlargement arithmetic on a hand-sized bin") {
  // Ten bins; only the first holds data, five detections out of ten points.
  std::vector<double> edges;
  for (int i = 0; i <= 10; ++i) edges.push_back(i);
  const auto part = partition_from_edges({edges});
  std::vector<double> xs;
  std::vector<int> zs;
  for (int i = 0; i < 10; ++i) {
    xs.push_back(0.05 + 0.09 * i);
    zs.push_back(i % 2);
  }
  const auto d = points_1d(xs, zs);
  const auto pm = build_perception_model(d, std::nullopt, {Method::Ours, 0.05, 1.0, part});
  const auto& r = pm.bins[0];
  // Independent recomputation of the plain interval at the per-bin level.
  const double a = 0.05 / 10;
  CHECK(r.raw_lo == doctest::Approx(stats::beta_quantile(a / 2, 5, 6)).epsilon(1e-12));
  CHECK(r.raw_hi == doctest::Approx(stats::beta_quantile(1 - a / 2, 6, 5)).epsilon(1e-12));
  CHECK(r.lo == doctest::Approx(std::max(0.0, r.raw_lo - r.delta)).epsilon(1e-12));
  CHECK(r.hi == doctest::Approx(std::min(1.0, r.raw_hi + r.delta)).epsilon(1e-12));

  CHECK(r.delta > 0.0);
  CHECK(r.lo < r.raw_lo);
}

TEST_CASE("variants nest per bin") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = sample_truth(rng, 3000, 0.0, 60.0);
    const auto part = partition_equal_width({{0.0}, {60.0}}, {5.0});
    const auto no_ci = build_perception_model(d, std::nullopt, {Method::NoCI, 0.05, 1.0, part});
    const auto npe = build_perception_model(d, std::nullopt, {Method::OursNPE, 0.05, 1.0, part});
    std::vector<PerceptionModel> ours;
    for (double w : {0.0, 0.3, 0.7, 1.0}) ours.push_back(build_perception_model(d, std::nullopt, {Method::Ours, 0.05, w, part}));
    for (std::size_t i = 0; i < part.num_bins(); ++i) {
      CHECK(npe.bins[i].lo <= no_ci.bins[i].lo);
      CHECK(no_ci.bins[i].hi <= npe.bins[i].hi);
      CHECK(ours.back().bins[i].lo <= npe.bins[i].lo);
      CHECK(npe.bins[i].hi <= ours.back().bins[i].hi);
      for (std::size_t j = 0; j + 1 < ours.size(); ++j) {
        CHECK(ours[j + 1].bins[i].lo <= ours[j].bins[i].lo);
        CHECK(ours[j].bins[i].hi <= ours[j + 1].bins[i].hi);
      }
    }
  }
}

TEST_CASE("cell overlap with perception bins") {
  const auto part = partition_from_edges({{0, 10, 20, 30}});
  const auto pm = model_with(part, {{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}});

  const auto inside = detection_intervals_for_cell(pm, {{2.0}, {8.0}});
  REQUIRE(inside.size() == 1);
  CHECK(inside[0].lo == 0.1);

  const auto straddle = detection_intervals_for_cell(pm, {{8.0}, {12.0}});
  REQUIRE(straddle.size() == 2);
  CHECK(straddle[0].hi == 0.2);
  CHECK(straddle[1].lo == 0.3);

  const auto face = detection_intervals_for_cell(pm, {{10.0}, {15.0}});
  REQUIRE(face.size() == 1);
  CHECK(face[0].bin == 1);

  const auto point = detection_intervals_for_cell(pm, {{10.0}, {10.0}});
  REQUIRE(point.size() == 1);
  CHECK(point[0].bin == 1);
  CHECK(detection_intervals_for_cell(pm, {{30.0}, {30.0}})[0].bin == 2);

  CHECK(code_of([&] { detection_intervals_for_cell(pm, {{25.0}, {31.0}}); }) == ErrorCode::OutOfBounds);
}

TEST_CASE("one-step closed loop gives the detection interval as safety") {
  // State 0 is the cell; detection stops safely (1), a miss crashes (2).
  const auto det = ActionLabel::pair(1, 0);
  const auto miss = ActionLabel::pair(0, 0);
  const Mdp mcpl(3, StateId{0},
                 {{StateId{0}, det, {{StateId{1}, 1.0}}},
                  {StateId{0}, miss, {{StateId{2}, 1.0}}},
                  {StateId{1}, ActionLabel::reachability(0), {{StateId{1}, 1.0}}},
                  {StateId{2}, ActionLabel::reachability(0), {{StateId{2}, 1.0}}}},
                 {{}, {}, {"bad"}});
  const auto part = partition_from_edges({{0, 10}});
  const auto pm = model_with(part, {{0.2, 0.4}});
  const CellOf cell_of = [](StateId s) -> std::optional<Box> {
    if (s.index == 0) return Box{{3.0}, {4.0}};
    return std::nullopt;
  };
  const auto abs = compose_closed_loop(mcpl, pm, cell_of);
  const auto safety = checker::safety_interval(abs, "bad");
  CHECK(safety.p_min == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(safety.p_max == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("overlapping bins multiply the nondeterminism") {
  const auto det = ActionLabel::pair(1, 0);
  const auto miss = ActionLabel::pair(0, 0);
  const auto miss_alt = ActionLabel::pair(0, 1);
  const Mdp mcpl(3, StateId{0},
                 {{StateId{0}, det, {{StateId{1}, 1.0}}},
                  {StateId{0}, miss, {{StateId{2}, 1.0}}},
                  {StateId{0}, miss_alt, {{StateId{1}, 0.5}, {StateId{2}, 0.5}}},
                  {StateId{1}, ActionLabel::reachability(0), {{StateId{1}, 1.0}}},
                  {StateId{2}, ActionLabel::reachability(0), {{StateId{2}, 1.0}}}},
                 {{}, {}, {"bad"}});
  const auto pm = model_with(partition_from_edges({{0, 10, 20}}), {{0.1, 0.2}, {0.3, 0.4}});
  const auto one = compose_closed_loop(mcpl, pm, [](StateId s) -> std::optional<Box> {
    if (s.index == 0) return Box{{2.0}, {4.0}};
    return std::nullopt;
  });
  const auto two = compose_closed_loop(mcpl, pm, [](StateId s) -> std::optional<Box> {
    if (s.index == 0) return Box{{8.0}, {12.0}};
    return std::nullopt;
  });
  CHECK(one.rows_of(StateId{0}).size() == 2);
  CHECK(two.rows_of(StateId{0}).size() == 4);

  // A row missing one perception action is rejected.
  const Mdp broken(2, StateId{0},
                   {{StateId{0}, det, {{StateId{1}, 1.0}}}, {StateId{1}, ActionLabel::reachability(0), {{StateId{1}, 1.0}}}});
  CHECK(code_of([&] {
          compose_closed_loop(broken, pm, [](StateId s) -> std::optional<Box> {
            if (s.index == 0) return Box{{2.0}, {4.0}};
            return std::nullopt;
          });
        }) == ErrorCode::MissingPerceptionAction);
}

TEST_CASE("point intervals give the Bernoulli mixture") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double p = u(rng), q = u(rng), r = u(rng);
    const Mdp mcpl(3, StateId{0},
                   {{StateId{0}, ActionLabel::pair(1, 0), {{StateId{0}, q}, {StateId{1}, 1 - q}}},
                    {StateId{0}, ActionLabel::pair(0, 0), {{StateId{1}, r}, {StateId{2}, 1 - r}}},
                    {StateId{1}, ActionLabel::reachability(0), {{StateId{1}, 1.0}}},
                    {StateId{2}, ActionLabel::reachability(0), {{StateId{2}, 1.0}}}},
                   {{}, {}, {"bad"}});
    const auto pm = model_with(partition_from_edges({{0, 1}}), {{p, p}});
    const auto abs = compose_closed_loop(mcpl, pm, [](StateId s) -> std::optional<Box> {
      if (s.index == 0) return Box{{0.0}, {1.0}};
      return std::nullopt;
    });
    const auto rows = abs.rows_of(StateId{0});
    REQUIRE(rows.size() == 1);
    const std::vector<double> expect{p * q, p * (1 - q) + (1 - p) * r, (1 - p) * (1 - r)};
    for (const auto& e : rows[0].edges) {
      CHECK(e.lo == doctest::Approx(expect[e.to.index]).epsilon(1e-14));
      CHECK(e.hi == doctest::Approx(e.lo).epsilon(1e-14));
    }
    // Reaching bad from the loop: (1-p)(1-r) / (1 - p q).
    const auto s = checker::safety_interval(abs, "bad");
    CHECK(1.0 - s.p_min == doctest::Approx((1 - p) * (1 - r) / (1 - p * q)).epsilon(1e-8));
  }
}

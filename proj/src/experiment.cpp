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

#include "percabs/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>

#include "percabs/error.hpp"

namespace percabs {

using abstraction::Method;

Pipeline::Pipeline(ExperimentConfig cfg)
    : cfg_(std::move(cfg)), mcpl_(aebs::build_controller_plant_abstraction(cfg_.grid, cfg_.aebs)) {}

abstraction::BinPartition Pipeline::partition(const PerceptionDataset& data, const VerifyOptions& opt) const {
  const stats::Box bounds{{cfg_.bins_lower}, {cfg_.bins_upper}};
  if (opt.bin_count) return abstraction::partition_equal_count(data, {*opt.bin_count}, bounds);
  return abstraction::partition_equal_width(bounds, {opt.bin_width});
}

abstraction::PerceptionModel Pipeline::perception_model(const PerceptionDataset& data, const VerifyOptions& opt) const {
  abstraction::AbstractionConfig acfg;
  acfg.method = opt.method;
  acfg.alpha_mc = opt.alpha_mc;
  acfg.w_pe = opt.w_pe;
  acfg.partition = partition(data, opt);
  return abstraction::build_perception_model(data, cfg_.perception.as_logistic(), acfg);
}

markov::Imdp Pipeline::product(const abstraction::PerceptionModel& pm) const {
  return abstraction::compose_closed_loop(mcpl_.mdp, pm, [this](markov::StateId s) { return mcpl_.perception_box(s); });
}

VerifyOutcome Pipeline::verify(const PerceptionDataset& data, const VerifyOptions& opt, bool keep_product) const {
  VerifyOutcome out;
  out.perception = perception_model(data, opt);
  auto prod = product(out.perception);
  out.safety = checker::safety_interval(prod, "bad");
  out.product_states = prod.num_states();
  out.product_rows = prod.rows().size();
  out.product_edges = prod.num_edges();
  if (keep_product) out.product.emplace(std::move(prod));
  return out;
}

PerceptionDataset Pipeline::generate_dataset(std::uint64_t seed) const {
  return aebs::generate_dataset(aebs::detector(cfg_.perception), cfg_.dataset_size, cfg_.dataset_lower,
                                cfg_.dataset_upper, seed);
}

aebs::McResult Pipeline::monte_carlo(std::uint64_t trials, std::uint64_t seed) const {
  return aebs::monte_carlo_safety(cfg_.aebs, aebs::detector(cfg_.perception), trials, seed);
}

nlohmann::json verify_report(const Pipeline& p, const VerifyOptions& opt, const VerifyOutcome& out) {
  const auto& mdp = p.controller_plant().mdp;
  nlohmann::json j;
  j["safety"] = {{"p_min", out.safety.p_min},
                 {"p_max", out.safety.p_max},
                 {"iterations", out.safety.iterations},
                 {"converged", out.safety.converged}};
  j["method"] = std::string(abstraction::to_string(opt.method));
  j["alpha_mc"] = opt.alpha_mc;
  j["w_pe"] = opt.w_pe;
  if (opt.bin_count) {
    j["bin_count"] = *opt.bin_count;
  } else {
    j["bin_width"] = opt.bin_width;
  }
  j["perception_model"] = out.perception.to_json();
  j["warnings"] = out.perception.partition.warnings;
  j["sizes"] = {{"mcpl_states", mdp.num_states()},
                {"mcpl_rows", mdp.rows().size()},
                {"product_states", out.product_states},
                {"product_rows", out.product_rows},
                {"product_edges", out.product_edges}};
  return j;
}

SweepKind parse_sweep_kind(const std::string& name) {
  if (name == "binwidth") return SweepKind::BinWidth;
  if (name == "enlargement") return SweepKind::Enlargement;
  fail(ErrorCode::Usage, "sweep kind must be 'binwidth' or 'enlargement'");
}

std::vector<Method> sweep_methods(SweepKind kind) {
  if (kind == SweepKind::Enlargement) return {Method::Ours};
  return {Method::NoCI, Method::OursNPE, Method::Ours, Method::LogRegCI, Method::GTPer};
}

SweepOutput run_sweep(const Pipeline& p, const SweepRequest& req, const PerceptionDataset& data,
                      const std::function<void(const SweepRow&)>& on_row) {
  SweepOutput out;
  if (req.values.empty()) fail(ErrorCode::Usage, "sweep needs at least one value");
  std::vector<double> values;
  for (double v : req.values) {
    if (std::find(values.begin(), values.end(), v) != values.end()) {
      out.warnings.push_back("duplicate sweep value " + format_double(v) + " ignored");
      continue;
    }
    values.push_back(v);
  }
  out.mc = p.monte_carlo(req.trials, req.seed);

  for (double value : values) {
    for (Method method : sweep_methods(req.kind)) {
      SweepRow row;
      row.value = value;
      row.method = method;
      row.mc_est = out.mc.estimate;
      row.mc_lo = out.mc.ci.lo;
      row.mc_hi = out.mc.ci.hi;
      VerifyOptions opt;
      opt.method = method;
      opt.alpha_mc = req.alpha_mc;
      opt.w_pe = req.kind == SweepKind::Enlargement ? value : req.w_pe;
      opt.bin_width = req.kind == SweepKind::BinWidth ? value : req.bin_width;
      const auto start = std::chrono::steady_clock::now();
      try {
        const auto res = p.verify(data, opt);
        row.p_min = res.safety.p_min;
        row.p_max = res.safety.p_max;
      } catch (const Error& e) {
        row.failure = std::string(error_name(e.code()));
        out.failed = true;
        out.exit_code = e.exit_code();
        out.warnings.push_back(e.what());
      }
      row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      out.rows.push_back(row);
      if (on_row) on_row(row);
      if (out.failed) return out;
    }
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_sweep_row(const SweepRow& row, bool timing) {
  std::string s = format_double(row.value) + "," + std::string(abstraction::to_string(row.method)) + ",";
  if (row.failure.empty()) {
    s += format_double(row.p_min) + "," + format_double(row.p_max) + ",";
  } else {
    s += "FAILED:" + row.failure + ",FAILED:" + row.failure + ",";
  }
  s += format_double(row.mc_est) + "," + format_double(row.mc_lo) + "," + format_double(row.mc_hi) + ",";
  s += timing ? format_double(std::round(row.runtime_ms * 1000.0) / 1000.0) : std::string("0");
  return s;
}

}  // namespace percabs

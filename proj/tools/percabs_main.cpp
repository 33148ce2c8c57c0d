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

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "percabs/config.hpp"
#include "percabs/error.hpp"
#include "percabs/experiment.hpp"
#include "percabs/serialization.hpp"

namespace {

using percabs::ErrorCode;
using percabs::fail;

struct Common {
  std::string config_path;
  std::uint64_t seed = 1;

  percabs::ExperimentConfig config() const {
    return config_path.empty() ? percabs::default_experiment_config() : percabs::load_config(config_path);
  }
};

void check_alpha(const std::optional<double>& a) {
  if (a && !(*a > 0.0 && *a < 1.0)) fail(ErrorCode::Usage, "--alpha-mc must lie in (0, 1)");
}

void check_w_pe(const std::optional<double>& w) {
  if (w && !(*w >= 0.0 && *w <= 1.0)) fail(ErrorCode::Usage, "--w-pe must lie in [0, 1]");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  return out;
}

void write_json(const nlohmann::json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

void export_model(const percabs::markov::Imdp& m, const std::string& path) {
  auto out = open_out(path);
  out << percabs::markov::to_json(m).dump() << "\n";
  auto listing = open_out(path + ".txt");
  percabs::markov::write_listing(listing, m);
}

nlohmann::json safety_json(const percabs::checker::SafetyInterval& s) {
  return {{"p_min", s.p_min}, {"p_max", s.p_max}, {"iterations", s.iterations}, {"converged", s.converged}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conservative perception abstractions and safety verification for an emergency braking system"};
  app.require_subcommand(1);
  Common common;

  // generate
  auto* gen = app.add_subcommand("generate", "Sample a labeled perception dataset from the synthetic detector");
  std::optional<std::uint64_t> gen_n;
  std::string gen_out;
  gen->add_option("--config", common.config_path, "Experiment config file");
  gen->add_option("--n", gen_n, "Number of points (default: dataset.n from the config)");
  gen->add_option("--seed", common.seed, "Master seed");
  gen->add_option("--out", gen_out, "Output CSV")->required();

  // verify
  auto* ver = app.add_subcommand("verify", "Build the abstraction and compute the verified safety interval");
  std::string dataset_path;
  std::string method = "ours";
  std::optional<double> bin_width;
  std::optional<std::size_t> bin_counts;
  std::optional<double> alpha_mc;
  std::optional<double> w_pe;
  std::uint64_t trials = 0;
  std::string out_path;
  std::string export_path;
  std::string model_path;
  std::string bad_label = "bad";
  ver->add_option("--config", common.config_path, "Experiment config file");
  ver->add_option("--dataset", dataset_path, "Dataset CSV (default: generated from the config and --seed)");
  ver->add_option("--method", method, "noCI, GTPer, logRegCI, oursNPE or ours");
  auto* bw = ver->add_option("--bin-width", bin_width, "Equal-width perception bins of this size (m)");
  ver->add_option("--bin-counts", bin_counts, "Equal-count perception bins, this many")->excludes(bw);
  ver->add_option("--alpha-mc", alpha_mc, "Overall confidence budget");
  ver->add_option("--w-pe", w_pe, "Enlargement weight in [0, 1]");
  ver->add_option("--trials", trials, "Also run this many Monte Carlo trials");
  ver->add_option("--seed", common.seed, "Master seed");
  ver->add_option("--out", out_path, "Report JSON (default: stdout)");
  ver->add_option("--export-model", export_path, "Write the product IMDP as JSON, plus a listing at <path>.txt");
  ver->add_option("--model", model_path, "Check a stored IMDP (JSON) instead of building one");
  ver->add_option("--bad-label", bad_label, "Label of unsafe states for --model");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Bin-width or enlargement sweep against a Monte Carlo baseline");
  std::string kind = "binwidth";
  std::vector<double> values;
  std::optional<std::uint64_t> sweep_trials;
  bool no_timing = false;
  sw->add_option("--config", common.config_path, "Experiment config file");
  sw->add_option("--kind", kind, "binwidth or enlargement");
  sw->add_option("--values", values, "Comma-separated sweep values")->delimiter(',')->required();
  sw->add_option("--dataset", dataset_path, "Dataset CSV (default: generated from the config and --seed)");
  sw->add_option("--trials", sweep_trials, "Monte Carlo trials (default: mc.trials from the config)");
  sw->add_option("--seed", common.seed, "Master seed");
  sw->add_option("--alpha-mc", alpha_mc, "Overall confidence budget");
  sw->add_option("--w-pe", w_pe, "Enlargement weight for bin-width sweeps");
  sw->add_option("--bin-width", bin_width, "Bin width for enlargement sweeps");
  sw->add_option("--out", out_path, "Output CSV")->required();
  sw->add_flag("--no-timing", no_timing, "Write runtime_ms as 0 for byte-identical reruns");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate one closed-loop run and dump its trace");
  sim->add_option("--config", common.config_path, "Experiment config file");
  sim->add_option("--seed", common.seed, "Seed");
  sim->add_option("--out", out_path, "Trace CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorCode::Usage);
  }

  try {
    if (*gen) {
      auto cfg = common.config();
      const auto data = percabs::aebs::generate_dataset(percabs::aebs::detector(cfg.perception),
                                                        gen_n.value_or(cfg.dataset_size), cfg.dataset_lower,
                                                        cfg.dataset_upper, common.seed);
      percabs::write_dataset_csv(gen_out, data);
      const double rate = data.size() ? static_cast<double>(data.positives()) / static_cast<double>(data.size()) : 0.0;
      std::cout << "n=" << data.size() << " positives=" << data.positives() << " rate=" << rate << "\n";
      return 0;
    }

    if (*ver) {
      check_alpha(alpha_mc);
      check_w_pe(w_pe);
      if (bin_width && !(*bin_width > 0.0)) fail(ErrorCode::Usage, "--bin-width must be positive");
      if (!model_path.empty()) {
        std::ifstream in(model_path);
        if (!in) fail(ErrorCode::Io, "cannot open model " + model_path);
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
          fail(ErrorCode::Io, "malformed model document: " + std::string(e.what()));
        }
        const auto m = percabs::markov::imdp_from_json(j);
        const auto s = percabs::checker::safety_interval(m, bad_label);
        if (!export_path.empty()) export_model(m, export_path);
        write_json({{"safety", safety_json(s)},
                    {"sizes", {{"product_states", m.num_states()}, {"product_rows", m.rows().size()},
                               {"product_edges", m.num_edges()}}}},
                   out_path);
        return 0;
      }
      const percabs::Pipeline pipeline(common.config());
      const auto& cfg = pipeline.config();
      percabs::VerifyOptions opt;
      opt.method = percabs::abstraction::parse_method(method);
      opt.alpha_mc = alpha_mc.value_or(cfg.alpha_mc);
      opt.w_pe = w_pe.value_or(cfg.w_pe);
      opt.bin_width = bin_width.value_or(cfg.bin_width);
      opt.bin_count = bin_counts;
      const auto data =
          dataset_path.empty() ? pipeline.generate_dataset(common.seed) : percabs::read_dataset_csv(dataset_path);
      const auto res = pipeline.verify(data, opt, !export_path.empty());
      auto report = percabs::verify_report(pipeline, opt, res);
      if (trials > 0) {
        const auto mc = pipeline.monte_carlo(trials, common.seed);
        report["monte_carlo"] = {{"trials", mc.trials}, {"safe", mc.safe}, {"estimate", mc.estimate},
                                 {"ci_lo", mc.ci.lo}, {"ci_hi", mc.ci.hi}};
      }
      if (res.product) export_model(*res.product, export_path);
      for (const auto& w : res.perception.partition.warnings) std::cerr << "warning: " << w << "\n";
      write_json(report, out_path);
      return 0;
    }

    if (*sw) {
      check_alpha(alpha_mc);
      check_w_pe(w_pe);
      const percabs::Pipeline pipeline(common.config());
      const auto& cfg = pipeline.config();
      percabs::SweepRequest req;
      req.kind = percabs::parse_sweep_kind(kind);
      req.values = values;
      req.trials = sweep_trials.value_or(cfg.mc_trials);
      req.seed = common.seed;
      req.alpha_mc = alpha_mc.value_or(cfg.alpha_mc);
      req.w_pe = w_pe.value_or(cfg.w_pe);
      req.bin_width = bin_width.value_or(cfg.bin_width);
      if (req.kind == percabs::SweepKind::Enlargement) {
        for (double v : req.values) check_w_pe(v);
      }
      const auto data =
          dataset_path.empty() ? pipeline.generate_dataset(common.seed) : percabs::read_dataset_csv(dataset_path);
      auto out = open_out(out_path);
      out << percabs::kSweepHeader << "\n";
      const auto result = percabs::run_sweep(pipeline, req, data, [&](const percabs::SweepRow& row) {
        out << percabs::format_sweep_row(row, !no_timing) << "\n";
        out.flush();
      });
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      return result.exit_code;
    }

    if (*sim) {
      const auto cfg = common.config();
      const auto trace = percabs::aebs::simulate_trace(cfg.aebs, percabs::aebs::detector(cfg.perception), common.seed);
      if (out_path.empty()) {
        percabs::aebs::write_trace_csv(std::cout, trace);
      } else {
        auto out = open_out(out_path);
        percabs::aebs::write_trace_csv(out, trace);
      }
      std::cerr << (trace.outcome == percabs::aebs::Outcome::Safe ? "safe" : "collision") << "\n";
      return 0;
    }
  } catch (const percabs::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

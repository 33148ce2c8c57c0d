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

#include "percabs/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "percabs/error.hpp"

namespace percabs {

namespace {

struct AxisSpec {
  aebs::AxisMode mode = aebs::AxisMode::Points;
  double min = 0.0;
  double max = 0.0;
  double step = 0.0;
  std::vector<double> edges;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& text, const std::string& where) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) fail(ErrorCode::Config, where + ": not a number: " + text);
  return v;
}

std::uint64_t to_count(const std::string& text, const std::string& where) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) fail(ErrorCode::Config, where + ": not a nonnegative integer: " + text);
  return v;
}

aebs::AxisMode to_mode(const std::string& text, const std::string& where) {
  if (text == "points") return aebs::AxisMode::Points;
  if (text == "intervals") return aebs::AxisMode::Intervals;
  fail(ErrorCode::Config, where + ": axis mode must be 'points' or 'intervals'");
}

aebs::Axis resolve(const AxisSpec& spec, const std::string& name) {
  try {
    if (!spec.edges.empty()) {
      aebs::Axis axis;
      axis.mode = spec.mode;
      axis.edges = spec.edges;
      return axis;
    }
    return aebs::uniform_axis(spec.mode, spec.min, spec.max, spec.step);
  } catch (const Error& e) {
    fail(ErrorCode::Config, "grid axis " + name + ": " + e.what());
  }
}

const char* mode_name(aebs::AxisMode m) { return m == aebs::AxisMode::Points ? "points" : "intervals"; }

}  // namespace

ExperimentConfig default_experiment_config() {
  ExperimentConfig cfg;
  cfg.grid.d = aebs::uniform_axis(aebs::AxisMode::Points, 0.0, 50.0, 0.02);
  cfg.grid.v = aebs::uniform_axis(aebs::AxisMode::Points, 0.0, 20.0, 0.2);
  return cfg;
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  ExperimentConfig cfg = default_experiment_config();
  AxisSpec d{aebs::AxisMode::Points, 0.0, 50.0, 0.02, {}};
  AxisSpec v{aebs::AxisMode::Points, 0.0, 20.0, 0.2, {}};

  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto real = [](double& field) -> Setter {
    return [&field](const std::string& t, const std::string& w) { field = to_double(t, w); };
  };
  auto count = [](std::uint64_t& field) -> Setter {
    return [&field](const std::string& t, const std::string& w) { field = to_count(t, w); };
  };
  auto axis_keys = [&](AxisSpec& a) -> std::map<std::string, Setter> {
    return {
        {"mode", [&a](const std::string& t, const std::string& w) { a.mode = to_mode(t, w); }},
        {"min", real(a.min)},
        {"max", real(a.max)},
        {"step", real(a.step)},
        {"edges",
         [&a](const std::string& t, const std::string& w) {
           a.edges.clear();
           std::stringstream ss(t);
           std::string item;
           while (std::getline(ss, item, ',')) a.edges.push_back(to_double(trim(item), w));
         }},
    };
  };
  std::map<std::string, Setter> keys = {
      {"tau", real(cfg.aebs.tau)},
      {"a_max", real(cfg.aebs.a_max)},
      {"B1", real(cfg.aebs.B1)},
      {"B2", real(cfg.aebs.B2)},
      {"C1", real(cfg.aebs.C1)},
      {"C2", real(cfg.aebs.C2)},
      {"T_h", real(cfg.aebs.T_h)},
      {"T_s", real(cfg.aebs.T_s)},
      {"u_fric", real(cfg.aebs.u_fric)},
      {"L", real(cfg.aebs.L)},
      {"d0", real(cfg.aebs.d0)},
      {"v0", real(cfg.aebs.v0)},
      {"perception.k", real(cfg.perception.k)},
      {"perception.x0", real(cfg.perception.x0)},
      {"bins.lower", real(cfg.bins_lower)},
      {"bins.upper", real(cfg.bins_upper)},
      {"bins.width", real(cfg.bin_width)},
      {"dataset.lower", real(cfg.dataset_lower)},
      {"dataset.upper", real(cfg.dataset_upper)},
      {"dataset.n", count(cfg.dataset_size)},
      {"mc.trials", count(cfg.mc_trials)},
      {"alpha_mc", real(cfg.alpha_mc)},
      {"w_pe", real(cfg.w_pe)},
  };
  for (auto& [k, setter] : axis_keys(d)) keys["grid.d." + k] = setter;
  for (auto& [k, setter] : axis_keys(v)) keys["grid.v." + k] = setter;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::Config, where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = keys.find(key);
    if (it == keys.end()) fail(ErrorCode::Config, where + ": unknown key '" + key + "'");
    it->second(value, where);
  }

  cfg.grid.d = resolve(d, "d");
  cfg.grid.v = resolve(v, "v");
  try {
    cfg.aebs.validate();
    cfg.grid.validate(cfg.aebs);
  } catch (const Error& e) {
    fail(ErrorCode::Config, source + ": " + e.what());
  }
  if (!(cfg.bins_upper > cfg.bins_lower)) fail(ErrorCode::Config, source + ": bins.upper must exceed bins.lower");
  if (!(cfg.dataset_upper >= cfg.dataset_lower)) fail(ErrorCode::Config, source + ": dataset range is empty");
  if (!(cfg.alpha_mc > 0.0 && cfg.alpha_mc < 1.0)) fail(ErrorCode::Config, source + ": alpha_mc must lie in (0, 1)");
  if (!(cfg.w_pe >= 0.0 && cfg.w_pe <= 1.0)) fail(ErrorCode::Config, source + ": w_pe must lie in [0, 1]");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "cannot open config file " + path);
  return parse_config(in, path);
}

void write_config(std::ostream& out, const ExperimentConfig& cfg) {
  const auto old = out.precision(17);
  const auto& a = cfg.aebs;
  out << "tau = " << a.tau << "\na_max = " << a.a_max << "\nB1 = " << a.B1 << "\nB2 = " << a.B2 << "\nC1 = " << a.C1
      << "\nC2 = " << a.C2 << "\nT_h = " << a.T_h << "\nT_s = " << a.T_s << "\nu_fric = " << a.u_fric
      << "\nL = " << a.L << "\nd0 = " << a.d0 << "\nv0 = " << a.v0 << "\n";
  out << "perception.k = " << cfg.perception.k << "\nperception.x0 = " << cfg.perception.x0 << "\n";
  for (const auto& [name, axis] : {std::pair{"d", &cfg.grid.d}, std::pair{"v", &cfg.grid.v}}) {
    out << "grid." << name << ".mode = " << mode_name(axis->mode) << "\ngrid." << name << ".edges = ";
    for (std::size_t i = 0; i < axis->edges.size(); ++i) out << (i ? "," : "") << axis->edges[i];
    out << "\n";
  }
  out << "bins.lower = " << cfg.bins_lower << "\nbins.upper = " << cfg.bins_upper << "\nbins.width = " << cfg.bin_width
      << "\ndataset.lower = " << cfg.dataset_lower << "\ndataset.upper = " << cfg.dataset_upper
      << "\ndataset.n = " << cfg.dataset_size << "\nmc.trials = " << cfg.mc_trials << "\nalpha_mc = " << cfg.alpha_mc
      << "\nw_pe = " << cfg.w_pe << "\n";
  out.precision(old);
}

}  // namespace percabs

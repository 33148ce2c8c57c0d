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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "percabs/checker.hpp"
#include "percabs/config.hpp"
#include "percabs/error.hpp"
#include "percabs/experiment.hpp"
#include "percabs/serialization.hpp"
#include "percabs/stats.hpp"

namespace py = pybind11;
using namespace percabs;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

PerceptionDataset dataset_from(const std::vector<std::vector<double>>& x, const std::vector<int>& z) {
  if (x.size() != z.size()) fail(ErrorCode::DimensionMismatch, "x and z differ in length");
  PerceptionDataset d;
  d.dim = x.empty() ? 1 : x.front().size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != d.dim) fail(ErrorCode::DimensionMismatch, "ragged points");
    d.add(x[i], z[i] != 0);
  }
  return d;
}

py::dict mc_dict(const aebs::McResult& r) {
  py::dict out;
  out["trials"] = r.trials;
  out["safe"] = r.safe;
  out["estimate"] = r.estimate;
  out["ci"] = py::make_tuple(r.ci.lo, r.ci.hi);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Conservative perception abstractions and interval MDP safety verification";

  static py::exception<Error> error(m, "PercabsError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def("beta_cdf", &stats::beta_cdf, py::arg("x"), py::arg("a"), py::arg("b"));
  m.def("beta_quantile", &stats::beta_quantile, py::arg("p"), py::arg("a"), py::arg("b"));
  m.def(
      "clopper_pearson",
      [](std::uint64_t k, std::uint64_t n, double alpha) {
        const auto ci = stats::clopper_pearson({k, n}, alpha);
        return py::make_tuple(ci.lo, ci.hi);
      },
      py::arg("k"), py::arg("n"), py::arg("alpha") = 0.05);
  m.def(
      "fit_logistic",
      [](const std::vector<std::vector<double>>& x, const std::vector<int>& z) {
        const auto fit = stats::fit_logistic(dataset_from(x, z));
        py::dict out;
        out["weights"] = fit.weights;
        out["intercept"] = fit.intercept;
        out["covariance"] = fit.covariance;
        out["iterations"] = fit.iterations;
        out["converged"] = fit.converged;
        return out;
      },
      py::arg("x"), py::arg("z"));

  m.def(
      "safety_interval",
      [](const std::string& model_json, const std::string& bad_label) {
        const auto model = markov::imdp_from_json(nlohmann::json::parse(model_json));
        const auto s = checker::safety_interval(model, bad_label);
        return py::make_tuple(s.p_min, s.p_max);
      },
      py::arg("model_json"), py::arg("bad_label") = "bad",
      "Safety interval [min, max] of never reaching bad_label in an IMDP given as JSON text.");

  py::class_<Pipeline>(m, "Pipeline")
      .def(py::init([](std::optional<std::string> config_path) {
             return Pipeline(config_path ? load_config(*config_path) : default_experiment_config());
           }),
           py::arg("config_path") = py::none())
      .def_property_readonly("mcpl_states", [](const Pipeline& p) { return p.controller_plant().mdp.num_states(); })
      .def(
          "verify",
          [](const Pipeline& p, const std::string& method, double bin_width, std::optional<double> alpha_mc,
             std::optional<double> w_pe, std::uint64_t dataset_seed) {
            VerifyOptions opt;
            opt.method = abstraction::parse_method(method);
            opt.bin_width = bin_width;
            opt.alpha_mc = alpha_mc.value_or(p.config().alpha_mc);
            opt.w_pe = w_pe.value_or(p.config().w_pe);
            const auto out = p.verify(p.generate_dataset(dataset_seed), opt);
            return to_python(verify_report(p, opt, out));
          },
          py::arg("method") = "ours", py::arg("bin_width") = 10.0, py::arg("alpha_mc") = py::none(),
          py::arg("w_pe") = py::none(), py::arg("dataset_seed") = 1)
      .def(
          "monte_carlo", [](const Pipeline& p, std::uint64_t trials, std::uint64_t seed) {
            return mc_dict(p.monte_carlo(trials, seed));
          },
          py::arg("trials"), py::arg("seed") = 1);
}

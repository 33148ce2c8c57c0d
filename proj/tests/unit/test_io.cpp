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

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "doctest.h"
#include "percabs/config.hpp"
#include "percabs/dataset.hpp"
#include "percabs/error.hpp"
#include "percabs/serialization.hpp"

using namespace percabs;
using namespace percabs::markov;

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

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::string kData = PERCABS_TEST_DATA;

}  // namespace

TEST_CASE("the toy model document round-trips byte for byte") {
  const auto text = slurp(kData + "/toy_model.json");
  const auto m = imdp_from_json(nlohmann::json::parse(text));
  CHECK(m.num_states() == 3);
  CHECK(m.has_label(StateId{1}, "bad"));
  CHECK(to_json(m).dump(2) + "\n" == text);
}

TEST_CASE("MDP documents") {
  const auto A = ActionLabel::pair(1, 2);
  const Mdp m(2, StateId{1}, {{StateId{0}, A, {{StateId{0}, 1.0}}}, {StateId{1}, A, {{StateId{0}, 0.25}, {StateId{1}, 0.75}}}},
              {{"x"}, {}});
  const auto j = to_json(m);
  CHECK(j["rows"][1]["action"]["per"] == 1);
  CHECK(j["rows"][1]["action"]["reach"] == 2);
  CHECK(j["rows"][1]["edges"][0]["lo"] == 0.25);
  const auto back = mdp_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(to_json(degenerate(m)) == j);

  auto bad = j;
  bad["rows"][1]["edges"][0]["hi"] = 0.3;
  CHECK_THROWS_AS(mdp_from_json(bad), Error);
  CHECK_NOTHROW(imdp_from_json(bad));
}

TEST_CASE("malformed model documents are rejected") {
  CHECK_THROWS_AS(imdp_from_json(nlohmann::json::parse(R"({"states": 1})")), Error);
  CHECK_THROWS_AS(imdp_from_json(nlohmann::json::parse(
                      R"({"states": 1, "initial": 0, "labels": [[]], "rows": [{"state": 0, "action": {"per": null, "reach": 0}, "edges": [{"to": 3, "lo": 1, "hi": 1}]}]})")),
                  Error);
}

TEST_CASE("transition listing") {
  const auto m = imdp_from_json(nlohmann::json::parse(slurp(kData + "/toy_model.json")));
  std::ostringstream s;
  write_listing(s, m);
  CHECK(s.str() ==
        "states 3\n"
        "initial 0\n"
        "label 1 bad\n"
        "0 (per=-,reach=0) -> 1 [0.2, 0.4]\n"
        "0 (per=-,reach=0) -> 2 [0.6, 0.8]\n"
        "1 (per=-,reach=0) -> 1 [1, 1]\n"
        "2 (per=-,reach=0) -> 2 [1, 1]\n");
}

TEST_CASE("dataset CSV") {
  PerceptionDataset d;
  d.dim = 2;
  d.add({1.5, -0.1}, true);
  d.add({3.0, 1e-7}, false);
  std::ostringstream out;
  write_dataset_csv(out, d);
  CHECK(out.str() == "x1,x2,z\n1.5,-0.1,1\n3,1e-07,0\n");
  std::istringstream in(out.str());
  const auto back = read_dataset_csv(in);
  CHECK(back.x == d.x);
  CHECK(back.z == d.z);

  std::istringstream header_only("x1,z\n");
  CHECK(read_dataset_csv(header_only).size() == 0);
  std::istringstream bad_label("x1,z\n1.0,2\n");
  CHECK(code_of([&] { read_dataset_csv(bad_label); }) == ErrorCode::Io);
  std::istringstream bad_header("a,b\n1,0\n");
  CHECK(code_of([&] { read_dataset_csv(bad_header); }) == ErrorCode::Io);
  std::istringstream ragged("x1,x2,z\n1,0\n");
  CHECK(code_of([&] { read_dataset_csv(ragged); }) == ErrorCode::Io);
  CHECK(code_of([] { read_dataset_csv(std::string("/nonexistent/data.csv")); }) == ErrorCode::Io);
}

TEST_CASE("shipped configs parse and match the defaults") {
  const auto cfg = load_config(std::string(PERCABS_SOURCE_DIR) + "/configs/aebs_default.cfg");
  std::ostringstream a, b;
  write_config(a, cfg);
  write_config(b, default_experiment_config());
  CHECK(a.str() == b.str());

  const auto coarse = load_config(std::string(PERCABS_SOURCE_DIR) + "/configs/aebs_coarse_grid.cfg");
  CHECK(coarse.grid.d.mode == aebs::AxisMode::Intervals);
  CHECK_NOTHROW(coarse.grid.validate(coarse.aebs));
  const auto m = aebs::build_controller_plant_abstraction(coarse.grid, coarse.aebs);
  CHECK(aebs::check_mcpl_conservative(m, coarse.aebs, 5000, 12).violations == 0);
}

TEST_CASE("config text") {
  std::istringstream in(
      "# comment\n"
      "tau = 0.05   # trailing\n"
      "\n"
      "grid.d.edges = 0, 5, 10, 50\n"
      "grid.d.mode = intervals\n"
      "dataset.n = 42\n");
  const auto cfg = parse_config(in, "inline");
  CHECK(cfg.aebs.tau == 0.05);
  CHECK(cfg.dataset_size == 42);
  CHECK(cfg.grid.d.edges == std::vector<double>{0, 5, 10, 50});

  std::ostringstream written;
  write_config(written, cfg);
  std::istringstream again(written.str());
  std::ostringstream rewritten;
  write_config(rewritten, parse_config(again, "written"));
  CHECK(rewritten.str() == written.str());

  std::istringstream unknown("colour = red\n");
  CHECK(code_of([&] { parse_config(unknown, "x"); }) == ErrorCode::Config);
  std::istringstream malformed("tau = fast\n");
  CHECK(code_of([&] { parse_config(malformed, "x"); }) == ErrorCode::Config);
  std::istringstream no_equals("tau 0.1\n");
  CHECK(code_of([&] { parse_config(no_equals, "x"); }) == ErrorCode::Config);
  CHECK(code_of([] { load_config("/nonexistent/percabs.cfg"); }) == ErrorCode::Config);
  try {
    load_config("/nonexistent/percabs.cfg");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("/nonexistent/percabs.cfg") != std::string::npos);
  }
}

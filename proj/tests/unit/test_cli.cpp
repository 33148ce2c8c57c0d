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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = PERCABS_CLI;
const std::string kData = PERCABS_TEST_DATA;

fs::path scratch() {
  static const fs::path dir = [] {
    const auto d = fs::temp_directory_path() / ("percabs_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Exit status of the CLI with the given arguments; stdout and stderr go to
// files in the scratch directory.
int run(const std::string& args) {
  const std::string cmd = "'" + kCli + "' " + args + " >'" + (scratch() / "stdout").string() + "' 2>'" +
                          (scratch() / "stderr").string() + "'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string path(const std::string& name) { return (scratch() / name).string(); }

}  // namespace

TEST_CASE("stored toy model verifies to the hand-computed interval") {
  REQUIRE(run("verify --model '" + kData + "/toy_model.json' --out '" + path("toy.json") + "' --export-model '" +
              path("toy_export.json") + "'") == 0);
  const auto j = nlohmann::json::parse(slurp(path("toy.json")));
  CHECK(j["safety"]["p_min"].get<double>() == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(j["safety"]["p_max"].get<double>() == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(j["sizes"]["product_states"] == 3);
  CHECK(slurp(path("toy_export.json.txt")).rfind("states 3\n", 0) == 0);
  CHECK(nlohmann::json::parse(slurp(path("toy_export.json"))) == nlohmann::json::parse(slurp(kData + "/toy_model.json")));
}

TEST_CASE("generate is deterministic") {
  REQUIRE(run("generate --n 1000 --seed 9 --out '" + path("a.csv") + "'") == 0);
  CHECK(slurp(scratch() / "stdout").rfind("n=1000 ", 0) == 0);
  REQUIRE(run("generate --n 1000 --seed 9 --out '" + path("b.csv") + "'") == 0);
  CHECK(slurp(path("a.csv")) == slurp(path("b.csv")));
  REQUIRE(run("generate --n 1000 --seed 10 --out '" + path("c.csv") + "'") == 0);
  CHECK(slurp(path("a.csv")) != slurp(path("c.csv")));
  REQUIRE(run("generate --n 0 --out '" + path("empty.csv") + "'") == 0);
  CHECK(slurp(path("empty.csv")) == "x1,z\n");
}

TEST_CASE("sweep output is stable") {
  REQUIRE(run("generate --n 5000 --seed 2 --out '" + path("sweep_data.csv") + "'") == 0);
  const std::string common = "sweep --kind binwidth --values 20,10 --trials 500 --seed 2 --no-timing --dataset '" +
                             path("sweep_data.csv") + "' --out ";
  REQUIRE(run(common + "'" + path("s1.csv") + "'") == 0);
  REQUIRE(run(common + "'" + path("s2.csv") + "'") == 0);
  const auto text = slurp(path("s1.csv"));
  CHECK(text == slurp(path("s2.csv")));
  const auto header = text.substr(0, text.find('\n') + 1);
  CHECK(header == slurp(kData + "/sweep_header.golden"));
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 2 * 5);

  REQUIRE(run("sweep --kind enlargement --values 0,0.3,0.3 --trials 200 --no-timing --dataset '" +
              path("sweep_data.csv") + "' --out '" + path("e.csv") + "'") == 0);
  CHECK(slurp(scratch() / "stderr").find("duplicate") != std::string::npos);
  const auto e = slurp(path("e.csv"));
  CHECK(std::count(e.begin(), e.end(), '\n') == 1 + 2);

  CHECK(run("sweep --values 10,100 --trials 200 --dataset '" + path("sweep_data.csv") + "' --out '" +
            path("f.csv") + "'") != 0);
  CHECK(slurp(path("f.csv")).find("FAILED:") != std::string::npos);
}

TEST_CASE("verify on a generated dataset") {
  REQUIRE(run("generate --n 5000 --seed 4 --out '" + path("v.csv") + "'") == 0);
  REQUIRE(run("verify --dataset '" + path("v.csv") + "' --method oursNPE --bin-width 20 --out '" + path("v.json") +
              "'") == 0);
  const auto j = nlohmann::json::parse(slurp(path("v.json")));
  CHECK(j["method"] == "oursNPE");
  CHECK(j["perception_model"]["bins"].size() == 3);
  CHECK(j["safety"]["p_min"].get<double>() <= j["safety"]["p_max"].get<double>());
}

TEST_CASE("exit codes") {
  CHECK(run("") == 2);
  CHECK(run("verify --w-pe 1.5 --model '" + kData + "/toy_model.json'") == 2);
  CHECK(run("verify --alpha-mc 0 --model '" + kData + "/toy_model.json'") == 2);
  CHECK(run("verify --bin-width 5 --bin-counts 4 --model '" + kData + "/toy_model.json'") == 2);
  CHECK(run("verify --method best --config /nonexistent.cfg") == 3);
  CHECK(run("generate --config /nonexistent/x.cfg --out '" + path("never.csv") + "'") == 3);
  CHECK(slurp(scratch() / "stderr").find("/nonexistent/x.cfg") != std::string::npos);
  CHECK(run("verify --model /nonexistent/model.json") == 4);
  CHECK(run("generate --n 10 --out /nonexistent/dir/out.csv") == 4);
  CHECK(run("sweep --kind depth --values 1 --out '" + path("never2.csv") + "'") == 2);
}

TEST_CASE("simulate writes a trace") {
  REQUIRE(run("simulate --seed 3 --out '" + path("trace.csv") + "'") == 0);
  const auto t = slurp(path("trace.csv"));
  CHECK(t.rfind("t,d,v,detected,b\n0,50,20,", 0) == 0);
  const auto outcome = slurp(scratch() / "stderr");
  CHECK((outcome == "safe\n" || outcome == "collision\n"));
}

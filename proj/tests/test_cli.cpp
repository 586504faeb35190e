// Copyright 2026 The Middleway Authors
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
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "middleway/rds.hpp"
#include "middleway/run_log.hpp"

using namespace middleway;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("middleway_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("run writes log, events and report") {
  const fs::path dir = scratch_dir("run");
  const auto r = cli({"run", "--out", dir.string(), "--override", "simulation.duration=60", "--override",
                      "log.rds_sample_interval=1"});
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(dir / "run_log.csv"));
  CHECK(fs::exists(dir / "events.jsonl"));
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "rds_grid.csv"));
  CHECK(r.out.find("collision no") != std::string::npos);
  CHECK_FALSE(read_run_log_csv((dir / "run_log.csv").string()).rows.empty());
}

TEST_CASE("collision exits with code 1") {
  const fs::path dir = scratch_dir("crash");
  const fs::path cfg = dir / "crash.json";
  std::ofstream(cfg) << R"({"simulation": {"duration": 20},
    "traffic": [], "inflows": [], "waves": {"pulses": [], "bottlenecks": []},
    "controller": {"u_min": -0.5},
    "vehicles": [{"id": 1, "kind": "human", "lane": 0, "position": 40, "velocity": 0, "driver_setpoint": 20},
                 {"id": 2, "kind": "controlled", "lane": 0, "position": 0, "velocity": 30}]})";
  const auto r = cli({"run", "--config", cfg.string(), "--out", (dir / "out").string()});
  CHECK(r.code == kExitCollision);
  CHECK(r.out.find("collision yes") != std::string::npos);
}

TEST_CASE("configuration problems exit with code 2 and name the field") {
  const fs::path dir = scratch_dir("bad");
  auto r = cli({"run", "--out", dir.string(), "--override", "simulation.dt=0"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("simulation.dt") != std::string::npos);

  r = cli({"run", "--config", "/nonexistent/scenario.json"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("/nonexistent/scenario.json") != std::string::npos);

  r = cli({"sweep", "--param", "controller.v_offset", "--values", "", "--out", dir.string()});
  CHECK(r.code == kExitUsage);

  r = cli({"rds", "--grid", "/nonexistent/grid.csv", "--trajectory", "/nonexistent/t.csv"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("/nonexistent/grid.csv") != std::string::npos);

  r = cli({"frobnicate"});
  CHECK(r.code == kExitUsage);
}

TEST_CASE("replay sweep is ordered in the offset") {
  const fs::path dir = scratch_dir("replay");
  REQUIRE(cli({"run", "--out", dir.string(), "--override", "simulation.duration=300"}).code == kExitOk);
  const auto r = cli({"sweep", "--param", "controller.v_offset", "--values", "2,4,6", "--replay",
                      (dir / "run_log.csv").string(), "--out", dir.string()});
  REQUIRE(r.code == kExitOk);
  std::istringstream in(slurp(dir / "sweep_replay.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line.find("v_des_2") != std::string::npos);
  CHECK(line.find("v_des_6") != std::string::npos);
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows > 0);
}

TEST_CASE("static synthetic rds gives zero error") {
  const fs::path dir = scratch_dir("rds");
  const auto r = cli({"rds", "--synthetic", "static", "--out", dir.string()});
  REQUIRE(r.code == kExitOk);
  std::istringstream in(slurp(dir / "rds_report.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == kErrorReportHeader);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    double lat = 0, mean = 1, sd = 1;
    char c1, c2;
    std::istringstream(line) >> lat >> c1 >> mean >> c2 >> sd;
    CHECK(mean == 0.0);
    CHECK(sd == 0.0);
  }
  CHECK(rows == 4);
}

TEST_CASE("rds reads files written by run") {
  const fs::path dir = scratch_dir("rds_files");
  REQUIRE(cli({"rds", "--synthetic", "wave", "--out", dir.string()}).code == kExitOk);
  const auto r = cli({"rds", "--grid", (dir / "rds_grid.csv").string(), "--trajectory",
                      (dir / "trajectory.csv").string(), "--out", (dir / "again").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(slurp(dir / "rds_report.csv") == slurp(dir / "again" / "rds_report.csv"));
}

TEST_CASE("string subcommand writes traces") {
  const fs::path dir = scratch_dir("string");
  const auto r = cli({"string", "--n", "3", "--horizon", "60", "--out", dir.string()});
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(dir / "string_traces.csv"));
  CHECK(fs::exists(dir / "string_steady.csv"));
}

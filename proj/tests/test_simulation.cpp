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

#include <map>
#include <sstream>

#include "doctest.h"
#include "middleway/errors.hpp"
#include "middleway/simulation.hpp"
#include "oracles.hpp"

using namespace middleway;
using doctest::Approx;

namespace {

ScenarioConfig empty_world() {
  ScenarioConfig c = canonical_scenario();
  c.traffic.clear();
  c.inflows.clear();
  c.vehicles.clear();
  c.waves = {};
  c.human_v0_std = 0.0;
  c.road.length = 60000.0;
  c.infrastructure.enabled = false;
  c.duration = 60.0;
  c.stop_when_controlled_exit = false;
  c.log.humans = true;
  return c;
}

VehicleSpec spec(int id, VehicleKind kind, double pos, double v, int lane = 0) {
  return {id, kind, lane, pos, v, 33.5, 0.0, std::nullopt};
}

std::string log_bytes(const RunLog& log) {
  std::ostringstream os;
  write_run_log_csv(os, log);
  write_events_jsonl(os, log.events);
  return os.str();
}

}  // namespace

TEST_CASE("a vehicle at its desired speed moves v dt per step") {
  ScenarioConfig c = empty_world();
  c.human.v0 = 30.0;
  c.vehicles.push_back(spec(1, VehicleKind::Human, 100.0, 30.0));
  Simulation sim(c);
  for (int i = 1; i <= 20; ++i) {
    REQUIRE(sim.step());
    REQUIRE(sim.vehicle(1)->velocity == 30.0);
    REQUIRE(sim.vehicle(1)->position == Approx(100.0 + 30.0 * 0.05 * i).epsilon(1e-12));
  }
}

TEST_CASE("equilibrium platoon stays put") {
  ScenarioConfig c = empty_world();
  const double v = 20.0;
  const double s = oracle::idm_equilibrium(v, c.human.v0, c.human.T, c.human.a, c.human.b, c.human.s0,
                                           c.human.delta);
  c.vehicles.push_back(spec(1, VehicleKind::Human, 1000.0, v));
  c.vehicles.push_back(spec(2, VehicleKind::Human, 1000.0 - 4.5 - s, v));
  c.waves.pulses.push_back({1, 0.0, 1000.0, v, 3.0});  // hold the leader
  Simulation sim(c);
  sim.run_to_end();
  CHECK(sim.vehicle(1)->velocity == Approx(v).epsilon(1e-12));
  CHECK(sim.vehicle(2)->velocity == Approx(v).epsilon(1e-7));
}

TEST_CASE("zero-duration run logs nothing") {
  ScenarioConfig c = empty_world();
  c.duration = 0.0;
  c.vehicles.push_back(spec(1, VehicleKind::Human, 0.0, 10.0));
  const RunResult r = run(c);
  CHECK(r.log.rows.empty());
  std::ostringstream os;
  write_run_log_csv(os, r.log);
  CHECK(os.str() == std::string(kRunLogHeader) + "\n");
}

TEST_CASE("free flow outside any corridor is all Normal") {
  ScenarioConfig c = empty_world();
  c.vehicles.push_back(spec(1, VehicleKind::Controlled, 0.0, 25.0));
  const RunResult r = run(c);
  REQUIRE(r.report.per_vehicle.count(1));
  CHECK(r.report.per_vehicle.at(1).fraction(Mode::Normal) == 1.0);
  CHECK(r.report.per_vehicle.at(1).engaged_time == Approx(60.0));
}

TEST_CASE("controlled vehicle behind a hard-braking lead keeps its barrier") {
  ScenarioConfig c = empty_world();
  c.duration = 120.0;
  c.vehicles.push_back(spec(1, VehicleKind::Human, 200.0, 30.0));
  c.vehicles.push_back(spec(2, VehicleKind::Controlled, 200.0 - 4.5 - 80.0, 30.0));
  c.waves.pulses.push_back({1, 10.0, 30.0, 0.0, 3.0});
  const RunResult r = run(c);
  CHECK_FALSE(r.report.collision);
  const ModeStats& m = r.report.per_vehicle.at(2);
  REQUIRE(m.min_h);
  CHECK(*m.min_h >= -0.1);
  CHECK(*m.min_gap >= c.controller.s_min / 2);
  CHECK(m.fraction(Mode::CBF) > 0.0);
}

TEST_CASE("a brief stop propagates upstream in a dense platoon") {
  ScenarioConfig c = empty_world();
  c.duration = 200.0;
  const double v = 25.0;
  const double s = oracle::idm_equilibrium(v, c.human.v0, c.human.T, c.human.a, c.human.b, c.human.s0,
                                           c.human.delta);
  for (int k = 0; k < 30; ++k) c.vehicles.push_back(spec(k + 1, VehicleKind::Human, 5000.0 - k * (s + 4.5), v));
  Simulation sim(c);
  WaveSchedule pulse;
  pulse.pulses.push_back({1, 10.0, 20.0, 2.0, 3.0});
  sim.seed_wave(pulse);
  double slowest_after = 1e9;
  while (sim.step()) {
    if (sim.time() <= 30.0) continue;
    for (const VehicleState& x : sim.vehicles()) {
      if (x.id >= 5) slowest_after = std::min(slowest_after, x.velocity);
    }
  }
  CHECK(slowest_after < 5.0);
}

TEST_CASE("the same stop on an empty road stays local") {
  ScenarioConfig c = empty_world();
  c.duration = 200.0;
  c.vehicles.push_back(spec(1, VehicleKind::Human, 5000.0, c.human.v0));
  c.vehicles.push_back(spec(2, VehicleKind::Human, 2000.0, c.human.v0));
  Simulation sim(c);
  WaveSchedule pulse;
  pulse.pulses.push_back({1, 10.0, 20.0, 2.0, 3.0});
  sim.seed_wave(pulse);
  double slowest = 1e9;
  while (sim.step()) slowest = std::min(slowest, sim.vehicle(2)->velocity);
  CHECK(slowest >= 0.9 * c.human.v0);
}

TEST_CASE("no schedule means no perturbation") {
  ScenarioConfig c = empty_world();
  c.vehicles.push_back(spec(1, VehicleKind::Human, 0.0, 20.0));
  Simulation a(c);
  Simulation b(c);
  b.seed_wave({});
  a.run_to_end();
  b.run_to_end();
  CHECK(log_bytes(a.log()) == log_bytes(b.log()));
}

namespace {

double worst_speed_gap(const RunLog& coarse, const RunLog& fine, int id) {
  std::map<long, double> ref;
  for (const LogRow& r : rows_for(fine, id)) ref[std::lround(r.t * 100)] = r.velocity_mps;
  double worst = 0.0;
  int matched = 0;
  for (const LogRow& r : rows_for(coarse, id)) {
    const auto it = ref.find(std::lround(r.t * 100));
    if (it == ref.end()) continue;
    worst = std::max(worst, std::abs(it->second - r.velocity_mps));
    ++matched;
  }
  return matched > 100 ? worst : 1e9;
}

}  // namespace

TEST_CASE("step size 0.05 tracks a 0.01 reference") {
  ScenarioConfig c = empty_world();
  c.duration = 90.0;
  c.vehicles.push_back(spec(1, VehicleKind::Human, 300.0, 30.0));
  c.vehicles.push_back(spec(2, VehicleKind::Controlled, 300.0 - 4.5 - 90.0, 22.0));
  // An all-human platoon through the same stop in the next lane.
  c.vehicles.push_back(spec(3, VehicleKind::Human, 300.0, 30.0, 1));
  c.vehicles.push_back(spec(4, VehicleKind::Human, 250.0, 25.0, 1));
  c.vehicles.push_back(spec(5, VehicleKind::Human, 200.0, 25.0, 1));
  c.waves.pulses.push_back({1, 10.0, 15.0, 12.0, 2.0});
  c.waves.pulses.push_back({3, 10.0, 15.0, 12.0, 2.0});
  ScenarioConfig fine = c;
  fine.dt = 0.01;
  const RunLog a = run(c).log;
  const RunLog b = run(fine).log;
  CHECK(worst_speed_gap(a, b, 1) <= 0.05);
  CHECK(worst_speed_gap(a, b, 3) <= 0.05);
  CHECK(worst_speed_gap(a, b, 4) <= 0.05);
  CHECK(worst_speed_gap(a, b, 5) <= 0.05);
  // The ramp advances one rate*dt per step, so the controlled trace leads by
  // about (0.05 - 0.01) s at up to 2 m/s^2.
  CHECK(worst_speed_gap(a, b, 2) <= 0.05 + 2.0 * 0.04);
}

TEST_CASE("canonical run invariants") {
  ScenarioConfig c = canonical_scenario();
  c.log.humans = true;
  const RunResult r = run(c);
  CHECK_FALSE(r.report.collision);

  std::map<int, const LogRow*> last;
  for (const LogRow& row : r.log.rows) {
    REQUIRE(row.velocity_mps >= 0.0);
    auto it = last.find(row.vehicle_id);
    if (it != last.end()) REQUIRE(row.position_m >= it->second->position_m);
    last[row.vehicle_id] = &row;
  }
  for (const auto& [id, m] : r.report.per_vehicle) {
    double sum = 0.0;
    for (const Mode mode : kAllModes) sum += m.fraction(mode);
    CHECK(sum == Approx(1.0).epsilon(1e-9));
    REQUIRE(m.min_gap);
    CHECK(*m.min_gap >= c.controller.s_min / 2);
    CHECK(m.fraction(Mode::CBF) > 0.0);
    CHECK(m.fraction(Mode::VSL) > 0.0);
    CHECK(m.fraction(Mode::Middleway) > 0.0);
  }
}

TEST_CASE("runs are reproducible from the seed") {
  ScenarioConfig c = canonical_scenario();
  c.duration = 200.0;
  const std::string a = log_bytes(run(c).log);
  CHECK(a == log_bytes(run(c).log));
  c.seed = 2;
  CHECK(a != log_bytes(run(c).log));
}

TEST_CASE("scenario validation names the field") {
  ScenarioConfig c = canonical_scenario();
  c.dt = 0.0;
  CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("simulation.dt"), ConfigError);
  c.dt = 0.2;
  CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("simulation.dt"), ConfigError);
  c = canonical_scenario();
  c.vehicles.push_back(spec(99, VehicleKind::Human, 800.0, 30.0));
  CHECK_THROWS_AS(Simulation{c}, ConfigError);
}

TEST_CASE("string experiment: single vehicle behind fast traffic") {
  StringConfig s;
  s.n_controlled = 1;
  s.horizon = 60.0;
  const StringResult r = string_experiment(canonical_scenario(), s);
  REQUIRE(r.vehicle_ids.size() == 1);
  // While the leaders are inside radar range the vehicle tracks v_pr - v_offset.
  bool seen = false;
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    if (r.t[i] < 10.0 || r.t[i] > 20.0) continue;
    seen = true;
    CHECK(r.mode[0][i] == Mode::Middleway);
    CHECK(r.v_des[0][i] == Approx(s.traffic_speed - 2.0).epsilon(1e-12));
  }
  CHECK(seen);
}

TEST_CASE("string experiment: fast traffic cascades down to the posted speed") {
  StringConfig s;
  const StringResult r = string_experiment(canonical_scenario(), s);
  CHECK_FALSE(r.collision);
  REQUIRE(r.steady_v_des.size() == 12);
  for (std::size_t k = 1; k < r.steady_v_des.size(); ++k) {
    CHECK(r.steady_v_des[k] <= r.steady_v_des[k - 1] + 1e-9);
  }
  for (const double v : r.steady_v_des) CHECK(v >= s.v_gr - 1e-9);
  CHECK(std::abs(r.steady_v_des.back() - s.v_gr) <= 0.5);
}

TEST_CASE("string experiment: slow traffic puts everyone in CBF") {
  StringConfig s;
  s.n_controlled = 5;
  s.traffic_speed = 10.0;
  s.spacing = 60.0;
  s.horizon = 900.0;
  const StringResult r = string_experiment(canonical_scenario(), s);
  CHECK_FALSE(r.collision);
  for (std::size_t k = 0; k < r.vehicle_ids.size(); ++k) {
    CHECK(r.mode[k].back() == Mode::CBF);
    CHECK(r.velocity[k].back() <= s.traffic_speed + 0.01);
  }
}

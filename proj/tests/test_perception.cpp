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

#include <algorithm>
#include <random>
#include <vector>

#include "doctest.h"
#include "middleway/perception.hpp"

using namespace middleway;
using doctest::Approx;

namespace {

VehicleState car(int id, double pos, double v, int lane = 0) {
  VehicleState s;
  s.id = id;
  s.position = pos;
  s.velocity = v;
  s.lane = lane;
  return s;
}

RadarFrame frame_of(double t, double v_ego, std::initializer_list<double> abs_speeds, int lane = 0) {
  RadarFrame f;
  f.timestamp = t;
  double pos = 10.0;
  for (const double v : abs_speeds) {
    f.targets.push_back({pos, v - v_ego, lane, t, 0});
    pos += 10.0;
  }
  return f;
}

}  // namespace

TEST_CASE("radar frame examples") {
  const VehicleState ego = car(1, 0.0, 20.0);
  RadarConfig cfg;

  CHECK(synthesize_radar(ego, {}, cfg, 0.0).targets.empty());
  const std::vector<VehicleState> far{car(2, 500.0, 20.0), car(3, -50.0, 20.0), car(4, 30.0, 20.0, 2)};
  CHECK(synthesize_radar(ego, far, cfg, 0.0).targets.empty());

  const std::vector<VehicleState> one{car(2, 44.5, 20.0)};
  const RadarFrame f = synthesize_radar(ego, one, cfg, 3.0);
  REQUIRE(f.targets.size() == 1);
  CHECK(f.targets[0].rel_position == Approx(40.0));
  CHECK(f.targets[0].rel_speed == 0.0);
  CHECK(f.targets[0].lane_offset == 0);
  CHECK(f.timestamp == 3.0);
}

TEST_CASE("radar keeps the 16 nearest, ties by id") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(5.0, 124.5);
  std::uniform_int_distribution<int> lane(-1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const VehicleState ego = car(0, 0.0, 25.0);
    std::vector<VehicleState> others;
    for (int k = 1; k <= 20; ++k) {
      // Round positions so equal distances actually occur.
      others.push_back(car(k, std::round(pos(rng)), 20.0, lane(rng)));
    }
    const RadarFrame f = synthesize_radar(ego, others, RadarConfig{}, 0.0);

    // Brute force: every candidate, full sort, truncate.
    std::vector<std::pair<double, int>> expect;
    for (const VehicleState& o : others) {
      const double g = o.rear() - ego.position;
      if (g >= 0.0 && g <= 120.0) expect.emplace_back(g, o.id);
    }
    std::sort(expect.begin(), expect.end());
    if (expect.size() > kMaxRadarTargets) expect.resize(kMaxRadarTargets);
    REQUIRE(f.targets.size() == expect.size());
    for (std::size_t k = 0; k < expect.size(); ++k) {
      REQUIRE(f.targets[k].vehicle_id == expect[k].second);
      REQUIRE(f.targets[k].rel_position == expect[k].first);
    }
  }
}

TEST_CASE("radar noise only with an rng") {
  const VehicleState ego = car(1, 0.0, 20.0);
  const std::vector<VehicleState> one{car(2, 44.5, 22.0)};
  RadarConfig cfg;
  cfg.rel_speed_noise = 0.5;
  CHECK(synthesize_radar(ego, one, cfg, 0.0).targets[0].rel_speed == Approx(2.0));
  std::mt19937_64 rng(1);
  CHECK(synthesize_radar(ego, one, cfg, 0.0, &rng).targets[0].rel_speed != 2.0);
}

TEST_CASE("lead extraction examples") {
  RadarFrame f;
  f.targets.push_back({20.0, 2.0, 0, 0.0, 1});
  auto lead = lead_vehicle(f, 10.0);
  REQUIRE(lead);
  CHECK(lead->s == 20.0);
  CHECK(lead->v_l == 12.0);

  RadarFrame side;
  side.targets.push_back({15.0, 2.0, 1, 0.0, 1});
  side.targets.push_back({25.0, 2.0, -1, 0.0, 2});
  CHECK_FALSE(lead_vehicle(side, 10.0));

  RadarFrame two;
  two.targets.push_back({20.0, 0.0, 0, 0.0, 1});
  two.targets.push_back({45.0, 5.0, 0, 0.0, 2});
  CHECK(lead_vehicle(two, 10.0)->s == 20.0);
}

TEST_CASE("radar then lead reproduces the true gap") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const VehicleState ego = car(1, 100.0 * u(rng), 30.0 * u(rng));
    const VehicleState lead = car(2, ego.position + 4.5 + 0.1 + 110.0 * u(rng), 30.0 * u(rng));
    const std::vector<VehicleState> others{lead};
    const auto m = lead_vehicle(synthesize_radar(ego, others, RadarConfig{}, 0.0), ego.velocity);
    REQUIRE(m);
    REQUIRE(m->s == Approx(gap(ego, lead)).epsilon(1e-12));
    REQUIRE(m->v_l == Approx(lead.velocity).epsilon(1e-12));
  }
}

TEST_CASE("prevailing estimator examples") {
  PrevailingEstimator est;
  CHECK(est.update(frame_of(0.0, 10.0, {13, 12, 14}), 10.0) == 0.0);  // three samples
  CHECK(est.update(frame_of(1.0, 10.0, {12, 14, 9}), 10.0) == Approx(13.0));
  CHECK(est.window().size() == 5);

  PrevailingEstimator slow;
  CHECK(slow.update(frame_of(0.0, 20.0, {12, 14, 9, 19, 20}), 20.0) == 0.0);
  CHECK(slow.window().empty());

  // Nothing new for more than the window: everything ages out.
  CHECK(est.update(frame_of(6.5, 10.0, {}), 10.0) == 0.0);
  CHECK(est.window().empty());
}

TEST_CASE("prevailing estimator can ignore adjacent lanes") {
  PrevailingConfig cfg;
  cfg.use_adjacent_lanes = false;
  PrevailingEstimator est(cfg);
  est.update(frame_of(0.0, 10.0, {20, 20, 20, 20, 20}, 1), 10.0);
  CHECK(est.window().empty());
  est.update(frame_of(0.1, 10.0, {20, 20, 20, 20, 20}, 0), 10.0);
  CHECK(est.estimate() == 20.0);
}

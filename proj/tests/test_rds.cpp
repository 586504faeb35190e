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

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "middleway/errors.hpp"
#include "middleway/rds.hpp"
#include "middleway/units.hpp"

using namespace middleway;
using doctest::Approx;

namespace {

// Two sensors at mile 0 and 0.5, `cols` reports of 30 s.
RdsGrid small_grid(const Eigen::MatrixXd& speeds) {
  RdsGrid g;
  g.origin = 0.0;
  g.cell_duration = 30.0;
  for (Eigen::Index i = 0; i < speeds.rows(); ++i) g.sensors.push_back(0.5 * static_cast<double>(i));
  g.speed = speeds;
  return g;
}

RdsGrid constant_grid(double c, Eigen::Index rows = 5, Eigen::Index cols = 10) {
  return small_grid(Eigen::MatrixXd::Constant(rows, cols, c));
}

}  // namespace

TEST_CASE("build_grid examples") {
  GridSpec spec;
  spec.sensors = {0.0, 0.5, 1.0};
  spec.columns = 4;

  std::vector<TrajectoryPoint> uniform;
  for (int t = 0; t < 120; t += 3) uniform.push_back({double(t), 0.01 * t, 17.0});
  const RdsGrid u = build_grid(uniform, spec);
  int occupied = 0;
  for (Eigen::Index i = 0; i < u.speed.rows(); ++i) {
    for (Eigen::Index j = 0; j < u.columns(); ++j) {
      if (u.missing(i, j)) continue;
      ++occupied;
      CHECK(u.speed(i, j) == 17.0);
    }
  }
  CHECK(occupied > 0);

  const std::vector<TrajectoryPoint> one{{40.0, 0.45, 20.0}};
  const RdsGrid g1 = build_grid(one, spec);
  CHECK(g1.speed(1, 1) == 20.0);
  CHECK(g1.missing(0, 0));

  const std::vector<TrajectoryPoint> two{{31.0, 0.5, 18.0}, {59.0, 0.6, 22.0}};
  CHECK(build_grid(two, spec).speed(1, 1) == 20.0);

  // Midpoints between sensors belong to the upper sensor; outside the outer zones is dropped.
  const std::vector<TrajectoryPoint> edge{{0.0, 0.25, 5.0}, {0.0, 1.3, 9.0}};
  const RdsGrid ge = build_grid(edge, spec);
  CHECK(ge.speed(1, 0) == 5.0);
  CHECK(ge.missing(2, 0));
}

TEST_CASE("ideal speed averages the 2x2 bracket") {
  Eigen::MatrixXd m(2, 3);
  m << 20, 24, 0,
       22, 26, 0;
  const RdsGrid g = small_grid(m);
  CHECK(ideal_speed({10.0, 0.2, 0.0}, g) == Approx(23.0));
  // On a lattice node the cells starting there are used.
  Eigen::MatrixXd n(3, 3);
  n << 1, 2, 3,
       4, 5, 6,
       7, 8, 9;
  const RdsGrid g3 = small_grid(n);
  CHECK(ideal_speed({30.0, 0.5, 0.0}, g3) == Approx((5 + 6 + 8 + 9) / 4.0));
  CHECK(ideal_speed({0.0, 0.0, 0.0}, g3) == Approx((1 + 2 + 4 + 5) / 4.0));
  CHECK(ideal_speed({5.0, 0.1, 0.0}, constant_grid(12.5)) == 12.5);
}

TEST_CASE("missing cells are dropped, all missing throws") {
  const double nan = std::nan("");
  Eigen::MatrixXd m(2, 2);
  m << 20, nan,
       nan, 26;
  CHECK(ideal_speed({10.0, 0.2, 0.0}, small_grid(m)) == Approx(23.0));
  m << nan, nan, nan, nan;
  CHECK_THROWS_AS(ideal_speed({10.0, 0.2, 0.0}, small_grid(m)), AllNeighborsMissing);
  CHECK_THROWS_AS(realtime_speed({10.0, 0.2, 0.0}, small_grid(m), 0.0), AllNeighborsMissing);
}

TEST_CASE("points outside coverage throw") {
  const RdsGrid g = constant_grid(10.0, 3, 4);
  CHECK_THROWS_AS(ideal_speed({10.0, -0.1, 0.0}, g), AllNeighborsMissing);
  CHECK_THROWS_AS(ideal_speed({10.0, 1.0, 0.0}, g), AllNeighborsMissing);
  CHECK_THROWS_AS(ideal_speed({95.0, 0.2, 0.0}, g), AllNeighborsMissing);  // no later report
  CHECK_THROWS_AS(realtime_speed({10.0, 0.2, 0.0}, g, 60.0), AllNeighborsMissing);
}

TEST_CASE("realtime speed uses the latest report at or before t minus latency") {
  Eigen::MatrixXd m(2, 4);
  m << 30, 30, 10, 10,
       30, 30, 10, 10;
  const RdsGrid g = small_grid(m);
  const TrajectoryPoint p{61.0, 0.2, 0.0};
  CHECK(realtime_speed(p, g, 0.0) == 10.0);
  CHECK(realtime_speed(p, g, 60.0) == 30.0);
  CHECK(ideal_speed(p, g) == 10.0);
  CHECK(realtime_speed(p, g, 60.0) - ideal_speed(p, g) == 20.0);
  CHECK(realtime_speed({60.0, 0.2, 0.0}, g, 0.0) == 10.0);  // report at exactly t counts
}

TEST_CASE("static fields give zero error for every latency") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double c = 40.0 * u(rng);
    const RdsGrid g = constant_grid(c, 9, 40);
    std::vector<TrajectoryPoint> traj;
    for (int k = 0; k < 200; ++k) traj.push_back({400.0 + k * 3.0 + u(rng), 4.0 * u(rng), c});
    const std::vector<double> lat{0.0, 10.0, 60.0, 120.0, 300.0};
    for (const ErrorStats& s : error_stats(traj, g, lat)) {
      REQUIRE(s.count > 0);
      REQUIRE(s.mean_mph == 0.0);
      REQUIRE(s.std_mph == 0.0);
    }
    for (const TrajectoryPoint& p : traj) {
      REQUIRE(ideal_speed(p, g) == realtime_speed(p, g, 10.0));
    }
  }
}

TEST_CASE("estimates stay within the contributing cells") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> speed(0.0, 35.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(6, 30);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = speed(rng);
  const RdsGrid g = small_grid(m);
  for (int k = 0; k < 5000; ++k) {
    const TrajectoryPoint p{29.0 * 30.0 * u(rng), 2.5 * u(rng), 0.0};
    const auto i = static_cast<Eigen::Index>(std::floor(p.mile_marker / 0.5));
    const auto j = static_cast<Eigen::Index>(std::floor(p.t / 30.0));
    const auto block = m.block(i, j, 2, 2);
    for (const Averaging a : {Averaging::Unweighted, Averaging::Bilinear}) {
      const double v = ideal_speed(p, g, a);
      REQUIRE(v >= block.minCoeff() - 1e-12);
      REQUIRE(v <= block.maxCoeff() + 1e-12);
    }
    const double r = realtime_speed(p, g, 0.0);
    REQUIRE(r >= block.col(0).minCoeff());
    REQUIRE(r <= block.col(0).maxCoeff());
    if (block.col(0) == block.col(1)) REQUIRE(r == Approx(ideal_speed(p, g)));
  }
}

TEST_CASE("bilinear weights") {
  Eigen::MatrixXd m(2, 2);
  m << 0, 10,
       20, 30;
  const RdsGrid g = small_grid(m);
  CHECK(ideal_speed({0.0, 0.0, 0.0}, g, Averaging::Bilinear) == 0.0);
  CHECK(ideal_speed({15.0, 0.25, 0.0}, g, Averaging::Bilinear) == Approx(15.0));
  CHECK(ideal_speed({0.0, 0.25, 0.0}, g, Averaging::Bilinear) == Approx(10.0));
}

TEST_CASE("error statistics in mph") {
  Eigen::MatrixXd m(2, 3);
  m << 10, 20, 20,
       10, 20, 20;
  const RdsGrid g = small_grid(m);
  const std::vector<TrajectoryPoint> traj{{35.0, 0.1, 0.0}, {40.0, 0.2, 0.0}};
  const std::vector<double> lat{0.0, 30.0};
  const auto stats = error_stats(traj, g, lat);
  REQUIRE(stats.size() == 2);
  CHECK(stats[0].count == 2);
  CHECK(stats[0].mean_mph == 0.0);
  CHECK(stats[1].mean_mph == Approx(mps_to_mph(-10.0)));
  CHECK(stats[1].std_mph == 0.0);
  REQUIRE(stats[1].histogram.size() == 1);
  CHECK(stats[1].histogram[0].count == 2);
  CHECK(stats[1].histogram[0].lo_mph == std::floor(mps_to_mph(-10.0)));
  CHECK_THROWS_AS(error_stats(traj, g, lat, 0.0), ConfigError);
}

TEST_CASE("grid and trajectory CSV round trip") {
  Eigen::MatrixXd m(2, 3);
  m << 1.25, std::nan(""), 3.0,
       0.1, 0.2, 1.0 / 3.0;
  RdsGrid g = small_grid(m);
  g.origin = 120.0;
  std::stringstream ss;
  write_grid_csv(ss, g);
  const RdsGrid back = read_grid_csv(ss);
  CHECK(back.origin == 120.0);
  CHECK(back.cell_duration == 30.0);
  CHECK(back.sensors == g.sensors);
  REQUIRE(back.speed.cols() == 3);
  CHECK(back.missing(0, 1));
  CHECK(back.speed(1, 2) == 1.0 / 3.0);

  const std::vector<TrajectoryPoint> traj{{0.1, 64.2, 30.0}, {0.6, 64.19, 1.0 / 7.0}};
  std::stringstream ts;
  write_trajectory_csv(ts, traj);
  const auto tb = read_trajectory_csv(ts);
  REQUIRE(tb.size() == 2);
  CHECK(tb[1].v == 1.0 / 7.0);
  CHECK(tb[1].mile_marker == 64.19);
}

TEST_CASE("bad files are rejected") {
  std::istringstream header("a,b,c\n");
  CHECK_THROWS_AS(read_grid_csv(header), InputError);
  std::istringstream off("sensor_mm,report_start_s,mean_speed_mps\n0,0,1\n0,30,1\n0,45,1\n");
  CHECK_THROWS_AS(read_grid_csv(off), InputError);
  std::istringstream dup("sensor_mm,report_start_s,mean_speed_mps\n0,0,1\n0,0,2\n");
  CHECK_THROWS_AS(read_grid_csv(dup), InputError);
  std::istringstream order("t_s,mile_marker,speed_mps\n1,0,1\n1,0,1\n");
  CHECK_THROWS_AS(read_trajectory_csv(order), InputError);
  CHECK_THROWS_WITH_AS(load_grid_csv("/nonexistent/grid.csv"), doctest::Contains("/nonexistent/grid.csv"),
                       InputError);
}

TEST_CASE("grid validation") {
  RdsGrid g = constant_grid(1.0, 2, 2);
  g.cell_duration = 0.0;
  CHECK_THROWS_AS(validate(g), ConfigError);
  g = constant_grid(1.0, 2, 2);
  g.sensors = {1.0, 0.0};
  CHECK_THROWS_AS(validate(g), ConfigError);
  g = constant_grid(-1.0, 2, 2);
  CHECK_THROWS_AS(validate(g), ConfigError);
}

TEST_CASE("synthetic wave field") {
  WaveField w;
  CHECK(w.speed(6.0, -1.0) == Approx(mph_to_mps(75.0)));
  CHECK(w.speed(6.0, 0.0) == Approx(mph_to_mps(75.0)));
  CHECK(w.speed(6.0, 120.0) == Approx(mph_to_mps(15.0)));
  // The wave reaches one mile upstream 300 s later at 12 mph.
  CHECK(w.speed(5.0, 300.0 + 120.0) == Approx(mph_to_mps(15.0)));

  SyntheticConfig cfg;
  const SyntheticCase sc = synthetic_case(cfg);
  CHECK(sc.grid.sensors.size() == 17);
  CHECK(sc.grid.columns() == 121);
  REQUIRE_FALSE(sc.trajectory.empty());
  CHECK(sc.trajectory.front().t == 300.0);
  for (std::size_t k = 1; k < sc.trajectory.size(); ++k) {
    REQUIRE(sc.trajectory[k].t > sc.trajectory[k - 1].t);
  }
}

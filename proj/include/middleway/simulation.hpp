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

#ifndef MIDDLEWAY_SIMULATION_HPP
#define MIDDLEWAY_SIMULATION_HPP

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "middleway/controller.hpp"
#include "middleway/idm.hpp"
#include "middleway/infrastructure.hpp"
#include "middleway/perception.hpp"
#include "middleway/rds.hpp"
#include "middleway/run_log.hpp"
#include "middleway/vehicle.hpp"

namespace middleway {

/// Speed-tracking override of one vehicle for a fixed interval.
struct WavePulse {
  int vehicle_id = 0;
  double start = 0.0;     // s
  double duration = 0.0;  // s
  double target_speed = 0.0;
  double decel = 3.0;  // m/s^2, magnitude
};

/// Stretch of road where human drivers' desired speed is capped by a
/// periodic stop-and-go profile, low + (high - low)(1 - cos(2 pi (t - start)/period))/2.
struct Bottleneck {
  double position_start = 0.0;  // m
  double position_end = 0.0;    // m
  double start = 0.0;           // s
  double period = 240.0;        // s
  double low_speed = 2.0;       // m/s
  double high_speed = 20.0;     // m/s

  double cap(double t) const;
};

struct WaveSchedule {
  std::vector<WavePulse> pulses;
  std::vector<Bottleneck> bottlenecks;
};

/// Evenly spaced human vehicles placed upstream from `front_position`.
struct TrafficBlock {
  int lane = 0;
  int count = 0;
  double front_position = 0.0;
  double spacing = 40.0;
  double speed = 30.0;
};

struct Inflow {
  int lane = 0;
  double rate_vph = 1800.0;
  double speed = 30.0;
  double jitter = 0.2;  // relative headway jitter, uniform in [-j, j]
};

struct VehicleSpec {
  int id = 0;
  VehicleKind kind = VehicleKind::Human;
  int lane = 0;
  double position = 0.0;
  double velocity = 0.0;
  double driver_setpoint = 33.5;  // controlled vehicles
  double engage_at = 0.0;         // s
  std::optional<double> disengage_at;
};

struct RoadConfig {
  double length = 20000.0;         // m
  double origin_mile_marker = 71.0;
  Direction direction = Direction::Westbound;
  /// Desired-speed offset per lane for human drivers (phantom lane bias).
  std::map<int, double> lane_speed_bias;

  double mile_marker(double position) const;
};

struct InfrastructureConfig {
  bool enabled = true;
  double mm_lo = 53.0;
  double mm_hi = 70.0;
  double gantry_spacing_mi = 0.5;
  std::string map_file;  // optional CSV; generated from the bounds when empty
  /// When set, every controlled vehicle sees this valid posting everywhere.
  std::optional<double> fixed_v_gr;
  double segment_mi = 0.5;
  VslAlgorithmConfig vsl;
  FeedConfig feed;
  VslClient::Config client;
};

struct LogConfig {
  double interval = 0.5;  // s
  bool humans = false;    // log every vehicle, not just controlled and probes
  double rds_sample_interval = 0.0;  // 0 disables trajectory sampling for RDS grids
  int rds_lane = 0;
};

struct ScenarioConfig {
  double duration = 1500.0;  // s
  double dt = 0.05;          // s
  std::uint64_t seed = 1;
  bool stop_when_controlled_exit = true;

  RoadConfig road;
  IdmParams human;
  double human_v0_std = 1.0;  // per-driver desired speed spread, m/s
  ControllerConfig controller;
  RadarConfig radar;
  PrevailingConfig prevailing;
  InfrastructureConfig infrastructure;
  WaveSchedule waves;
  std::vector<TrafficBlock> traffic;
  std::vector<Inflow> inflows;
  std::vector<VehicleSpec> vehicles;
  LogConfig log;
};

/// Throws ConfigError naming the offending field.
void validate(const ScenarioConfig& cfg);

/// Dense-platoon corridor run: upstream free flow, a stop-and-go bottleneck
/// inside the VSL corridor, two probe/controlled pairs entering from upstream.
ScenarioConfig canonical_scenario();

struct ModeStats {
  std::map<Mode, double> time;             // s per mode
  std::map<std::string, int> transitions;  // "From->To"
  double engaged_time = 0.0;
  std::optional<double> min_h;    // barrier value while engaged with a lead
  std::optional<double> min_gap;  // to the lead while engaged

  double fraction(Mode m) const;
};

struct RunReport {
  std::uint64_t seed = 0;
  bool collision = false;
  std::string collision_detail;
  double simulated_time = 0.0;
  std::map<int, ModeStats> per_vehicle;  // controlled vehicles
  ModeStats overall;
};

struct RunResult {
  RunLog log;
  RunReport report;
  std::vector<TrajectoryPoint> rds_samples;
};

/// Fixed-step longitudinal world. Lanes are independent single-file streams;
/// controlled vehicles see adjacent lanes through radar only.
class Simulation {
 public:
  explicit Simulation(ScenarioConfig cfg);

  /// Advances one dt. Returns false once the run has halted (collision,
  /// duration reached, or all controlled vehicles gone).
  bool step();
  void run_to_end();

  double time() const { return static_cast<double>(step_) * cfg_.dt; }
  bool halted() const { return halted_; }
  bool collided() const { return report_.collision; }

  std::vector<VehicleState> vehicles() const;
  std::optional<VehicleState> vehicle(int id) const;
  /// Last controller output of a controlled vehicle.
  std::optional<ControllerOutput> last_output(int id) const;
  std::optional<double> last_v_pr(int id) const;

  const RunLog& log() const { return log_; }
  const RunReport& report() const { return report_; }
  const CorridorMap& corridor() const { return map_; }
  RunResult take_result();

  /// Adds perturbations to the running world.
  void seed_wave(const WaveSchedule& schedule);

 private:
  struct ControlledState {
    ControlledState(SpeedController c, PrevailingEstimator e, VslClient v)
        : controller(std::move(c)), estimator(std::move(e)), vsl(std::move(v)) {}

    SpeedController controller;
    PrevailingEstimator estimator;
    VslClient vsl;
    double driver_setpoint = 0.0;
    double engage_at = 0.0;
    std::optional<double> disengage_at;
    bool engaged = false;
    std::optional<ControllerOutput> last;
    double v_pr = 0.0;
    VslReading reading;
    bool in_corridor = false;
    std::optional<Mode> prev_mode;
  };

  struct Agent {
    VehicleState state;
    double v0 = 0.0;
    double accel = 0.0;
    std::optional<ControlledState> ctrl;
  };

  using Lane = std::deque<Agent>;  // front is furthest downstream

  void build_initial_world();
  Agent make_human(int id, VehicleKind kind, int lane, double position, double velocity);
  void update_infrastructure(double t);
  double human_accel(const Agent& a, const Agent* leader, double t) const;
  double controlled_accel(Agent& a, const Agent* leader, double t);
  std::vector<VehicleState> radar_candidates(const VehicleState& ego) const;
  void handle_inflows(double t);
  void remove_exited(double t);
  bool check_collisions(double t);
  void log_state(double t);
  void sample_rds(double t);
  void record_mode(Agent& a, const ControllerOutput& out, const std::optional<LeadMeasurement>& lead);

  ScenarioConfig cfg_;
  std::mt19937_64 rng_;
  std::map<int, Lane> lanes_;
  CorridorMap map_;
  VslController vsl_;
  FeedClient feed_;
  std::int64_t step_ = 0;
  bool halted_ = false;
  int next_id_ = 0;
  std::map<int, double> next_inflow_;
  std::int64_t log_every_ = 1;
  std::int64_t rds_every_ = 0;
  RunLog log_;
  RunReport report_;
  std::vector<TrajectoryPoint> rds_samples_;
};

/// Runs a scenario to completion.
RunResult run(const ScenarioConfig& cfg);

struct StringConfig {
  int n_controlled = 12;
  double traffic_speed = 30.0;  // m/s
  double v_gr = 13.4;           // m/s
  double spacing = 80.0;        // initial gap between controlled vehicles, m
  int traffic_vehicles = 3;     // fast human leaders ahead of the string
  double traffic_spacing = 80.0;
  double horizon = 600.0;       // s
  double settle_window = 30.0;  // trailing window for steady state, s
};

struct StringResult {
  std::vector<int> vehicle_ids;                  // front to back
  std::vector<double> t;                         // sample times
  std::vector<std::vector<double>> v_des;        // [vehicle][sample]
  std::vector<std::vector<double>> velocity;     // [vehicle][sample]
  std::vector<std::vector<Mode>> mode;           // [vehicle][sample]
  std::vector<double> steady_v_des;              // mean over the settle window
  bool collision = false;
};

/// n controlled vehicles in single file behind fast prevailing traffic under
/// a uniform posted limit.
StringResult string_experiment(const ScenarioConfig& base, const StringConfig& s);

}  // namespace middleway

#endif  // MIDDLEWAY_SIMULATION_HPP

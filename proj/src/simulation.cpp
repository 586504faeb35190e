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

#include "middleway/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "middleway/errors.hpp"
#include "middleway/units.hpp"

namespace middleway {

namespace {

constexpr double kEps = 1e-9;

std::int64_t steps_per(double interval, double dt) {
  return std::max<std::int64_t>(1, std::llround(interval / dt));
}

}  // namespace

double Bottleneck::cap(double t) const {
  const double phase = 2.0 * std::numbers::pi * (t - start) / period;
  return low_speed + (high_speed - low_speed) * 0.5 * (1.0 - std::cos(phase));
}

double RoadConfig::mile_marker(double position) const {
  const double miles = meters_to_miles(position);
  return direction == Direction::Westbound ? origin_mile_marker - miles
                                           : origin_mile_marker + miles;
}

double ModeStats::fraction(Mode m) const {
  if (engaged_time <= 0.0) return 0.0;
  const auto it = time.find(m);
  return it == time.end() ? 0.0 : it->second / engaged_time;
}

void validate(const ScenarioConfig& cfg) {
  if (!(cfg.dt > 0.0 && cfg.dt <= 0.1)) throw ConfigError("simulation.dt", "must be in (0, 0.1]");
  if (!(cfg.duration >= 0.0)) throw ConfigError("simulation.duration", "must be >= 0");
  if (!(cfg.road.length > 0.0)) throw ConfigError("road.length", "must be > 0");
  if (!(cfg.human_v0_std >= 0.0)) throw ConfigError("human.v0_std", "must be >= 0");
  validate(cfg.controller);
  validate(cfg.human);
  if (!(cfg.radar.range > 0.0)) throw ConfigError("perception.range", "must be > 0");
  if (!(cfg.radar.rel_speed_noise >= 0.0)) {
    throw ConfigError("perception.rel_speed_noise", "must be >= 0");
  }
  if (!(cfg.prevailing.window_duration > 0.0)) {
    throw ConfigError("perception.window_duration", "must be > 0");
  }
  const auto& inf = cfg.infrastructure;
  if (!(inf.mm_hi > inf.mm_lo)) throw ConfigError("infrastructure.mm_hi", "must exceed mm_lo");
  if (!(inf.segment_mi > 0.0)) throw ConfigError("infrastructure.segment_mi", "must be > 0");
  if (!(inf.feed.latency >= 0.0)) throw ConfigError("infrastructure.latency", "must be >= 0");
  if (!(inf.feed.dropout >= 0.0 && inf.feed.dropout <= 1.0)) {
    throw ConfigError("infrastructure.dropout", "must be in [0, 1]");
  }
  if (!(inf.feed.staleness > 0.0)) throw ConfigError("infrastructure.staleness", "must be > 0");
  if (!(inf.vsl.update_period > 0.0)) {
    throw ConfigError("infrastructure.update_period", "must be > 0");
  }
  if (inf.vsl.min_mph > inf.vsl.max_mph) {
    throw ConfigError("infrastructure.min_mph", "must not exceed max_mph");
  }
  if (inf.fixed_v_gr && !(*inf.fixed_v_gr >= 0.0)) {
    throw ConfigError("infrastructure.fixed_v_gr", "must be >= 0");
  }
  if (!(inf.client.poll_period > 0.0)) throw ConfigError("infrastructure.poll_period", "must be > 0");
  if (!(cfg.log.interval > 0.0)) throw ConfigError("log.interval", "must be > 0");
  if (!(cfg.log.rds_sample_interval >= 0.0)) {
    throw ConfigError("log.rds_sample_interval", "must be >= 0");
  }
  for (const Bottleneck& b : cfg.waves.bottlenecks) {
    if (!(b.period > 0.0)) throw ConfigError("waves.bottlenecks.period", "must be > 0");
    if (!(b.position_end > b.position_start)) {
      throw ConfigError("waves.bottlenecks.position_end", "must exceed position_start");
    }
    if (!(b.low_speed >= 0.0 && b.high_speed >= b.low_speed)) {
      throw ConfigError("waves.bottlenecks.low_speed", "need 0 <= low_speed <= high_speed");
    }
  }
  for (const WavePulse& p : cfg.waves.pulses) {
    if (!(p.duration >= 0.0)) throw ConfigError("waves.pulses.duration", "must be >= 0");
    if (!(p.decel > 0.0)) throw ConfigError("waves.pulses.decel", "must be > 0");
    if (!(p.target_speed >= 0.0)) throw ConfigError("waves.pulses.target_speed", "must be >= 0");
  }
  for (const TrafficBlock& b : cfg.traffic) {
    if (b.count < 0) throw ConfigError("traffic.count", "must be >= 0");
    if (!(b.spacing > 0.0)) throw ConfigError("traffic.spacing", "must be > 0");
    if (!(b.speed >= 0.0)) throw ConfigError("traffic.speed", "must be >= 0");
  }
  for (const Inflow& f : cfg.inflows) {
    if (!(f.rate_vph > 0.0)) throw ConfigError("inflows.rate_vph", "must be > 0");
    if (!(f.jitter >= 0.0 && f.jitter < 1.0)) throw ConfigError("inflows.jitter", "must be in [0, 1)");
  }
  std::set<int> ids;
  for (const VehicleSpec& v : cfg.vehicles) {
    if (v.id < 0) throw ConfigError("vehicles.id", "must be >= 0");
    if (!ids.insert(v.id).second) {
      throw ConfigError("vehicles.id", "duplicate id " + std::to_string(v.id));
    }
    if (!(v.velocity >= 0.0)) throw ConfigError("vehicles.velocity", "must be >= 0");
    if (v.kind == VehicleKind::Controlled && !(v.driver_setpoint > 0.0)) {
      throw ConfigError("vehicles.driver_setpoint", "must be > 0");
    }
  }
}

Simulation::Simulation(ScenarioConfig cfg)
    : cfg_(std::move(cfg)),
      rng_(cfg_.seed),
      vsl_(cfg_.infrastructure.vsl),
      feed_(cfg_.infrastructure.feed, cfg_.seed ^ 0x9e3779b97f4a7c15ULL) {
  validate(cfg_);
  cfg_.controller.dt = cfg_.dt;
  report_.seed = cfg_.seed;
  const auto& inf = cfg_.infrastructure;
  if (inf.enabled && !inf.fixed_v_gr) {
    map_ = inf.map_file.empty()
               ? make_corridor(inf.mm_lo, inf.mm_hi, inf.gantry_spacing_mi)
               : load_corridor_csv(inf.map_file, inf.mm_lo, inf.mm_hi);
  }
  log_every_ = steps_per(cfg_.log.interval, cfg_.dt);
  if (cfg_.log.rds_sample_interval > 0.0) {
    rds_every_ = steps_per(cfg_.log.rds_sample_interval, cfg_.dt);
  }
  build_initial_world();
}

Simulation::Agent Simulation::make_human(int id, VehicleKind kind, int lane, double position,
                                         double velocity) {
  Agent a;
  a.state.id = id;
  a.state.kind = kind;
  a.state.lane = lane;
  a.state.position = position;
  a.state.velocity = velocity;
  double bias = 0.0;
  if (const auto it = cfg_.road.lane_speed_bias.find(lane); it != cfg_.road.lane_speed_bias.end()) {
    bias = it->second;
  }
  double spread = 0.0;
  if (cfg_.human_v0_std > 0.0) {
    std::normal_distribution<double> n(0.0, cfg_.human_v0_std);
    spread = n(rng_);
  }
  a.v0 = std::max(5.0, cfg_.human.v0 + bias + spread);
  return a;
}

void Simulation::build_initial_world() {
  for (const VehicleSpec& v : cfg_.vehicles) next_id_ = std::max(next_id_, v.id + 1);

  for (const VehicleSpec& v : cfg_.vehicles) {
    Agent a = make_human(v.id, v.kind, v.lane, v.position, v.velocity);
    if (v.kind == VehicleKind::Controlled) {
      a.v0 = v.driver_setpoint;
      ControlledState c{SpeedController(cfg_.controller), PrevailingEstimator(cfg_.prevailing),
                        VslClient(cfg_.infrastructure.client)};
      c.driver_setpoint = v.driver_setpoint;
      c.engage_at = v.engage_at;
      c.disengage_at = v.disengage_at;
      c.controller.reset(v.velocity);
      a.ctrl = std::move(c);
      report_.per_vehicle[v.id];
    }
    lanes_[v.lane].push_back(std::move(a));
  }

  for (const TrafficBlock& b : cfg_.traffic) {
    // Generated traffic keeps clear of explicit vehicles; controlled ones
    // also get their CBF headway ahead of them.
    auto blocked = [&](double x) {
      return std::any_of(cfg_.vehicles.begin(), cfg_.vehicles.end(), [&](const VehicleSpec& v) {
        if (v.lane != b.lane) return false;
        double ahead = 0.5 * b.spacing + 5.0;
        if (v.kind == VehicleKind::Controlled) {
          ahead += cfg_.controller.t_min * v.velocity + cfg_.controller.s_min;
        }
        return x > v.position - 0.5 * b.spacing - 5.0 && x < v.position + ahead;
      });
    };
    for (int i = 0; i < b.count; ++i) {
      const double x = b.front_position - i * b.spacing;
      if (blocked(x)) continue;
      lanes_[b.lane].push_back(make_human(next_id_++, VehicleKind::Human, b.lane, x, b.speed));
    }
  }

  for (auto& [lane_id, lane] : lanes_) {
    std::stable_sort(lane.begin(), lane.end(), [](const Agent& a, const Agent& b) {
      return a.state.position > b.state.position;
    });
    for (std::size_t i = 1; i < lane.size(); ++i) {
      if (gap(lane[i].state, lane[i - 1].state) <= 0.0) {
        throw ConfigError("vehicles", "vehicles " + std::to_string(lane[i].state.id) + " and " +
                                          std::to_string(lane[i - 1].state.id) +
                                          " overlap in lane " + std::to_string(lane_id));
      }
    }
  }

  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (std::size_t k = 0; k < cfg_.inflows.size(); ++k) {
    next_inflow_[static_cast<int>(k)] = 3600.0 / cfg_.inflows[k].rate_vph * uni(rng_);
  }
}

void Simulation::seed_wave(const WaveSchedule& schedule) {
  cfg_.waves.pulses.insert(cfg_.waves.pulses.end(), schedule.pulses.begin(),
                           schedule.pulses.end());
  cfg_.waves.bottlenecks.insert(cfg_.waves.bottlenecks.end(), schedule.bottlenecks.begin(),
                                schedule.bottlenecks.end());
}

void Simulation::update_infrastructure(double t) {
  const auto& inf = cfg_.infrastructure;
  if (!inf.enabled || inf.fixed_v_gr) return;
  if (vsl_.due(t)) {
    const auto n = static_cast<std::size_t>(std::ceil((inf.mm_hi - inf.mm_lo) / inf.segment_mi - kEps));
    std::vector<double> sum(n, 0.0);
    std::vector<int> count(n, 0);
    for (const auto& [lane_id, lane] : lanes_) {
      for (const Agent& a : lane) {
        const double mm = cfg_.road.mile_marker(a.state.position);
        if (!map_.contains(mm)) continue;
        const auto k = std::min(n - 1, static_cast<std::size_t>((mm - inf.mm_lo) / inf.segment_mi));
        sum[k] += a.state.velocity;
        ++count[k];
      }
    }
    std::vector<SegmentSpeed> segments;
    for (std::size_t k = 0; k < n; ++k) {
      if (count[k] == 0) continue;
      const double a = inf.mm_lo + static_cast<double>(k) * inf.segment_mi;
      segments.push_back({a, std::min(a + inf.segment_mi, inf.mm_hi), sum[k] / count[k], cfg_.road.direction});
    }
    std::map<std::string, int> before;
    for (const Gantry& g : map_.gantries) before[g.id] = g.posted_mph;
    for (const FeedMessage& m : vsl_.update(t, map_, segments)) {
      feed_.publish(m);
      if (before[m.gantry_id] != m.posted_mph) {
        log_.events.push_back({t, "posting", -1, m.gantry_id + " " + std::to_string(m.posted_mph)});
      }
    }
  }
  feed_.advance(t);
}

double Simulation::human_accel(const Agent& a, const Agent* leader, double t) const {
  double v0 = a.v0;
  for (const Bottleneck& b : cfg_.waves.bottlenecks) {
    if (t + kEps >= b.start && a.state.position >= b.position_start &&
        a.state.position <= b.position_end) {
      v0 = std::min(v0, b.cap(t));
    }
  }
  std::optional<LeadMeasurement> lead;
  if (leader != nullptr) lead = LeadMeasurement{gap(a.state, leader->state), leader->state.velocity};
  double acc = idm_acceleration(a.state.velocity, v0, lead, cfg_.human);
  for (const WavePulse& p : cfg_.waves.pulses) {
    if (p.vehicle_id == a.state.id && t + kEps >= p.start && t < p.start + p.duration - kEps) {
      acc = std::min(acc, std::clamp(p.target_speed - a.state.velocity, -p.decel, cfg_.human.a));
    }
  }
  return acc;
}

std::vector<VehicleState> Simulation::radar_candidates(const VehicleState& ego) const {
  std::vector<VehicleState> out;
  const double far = ego.position + cfg_.radar.range + 50.0;
  for (int l = ego.lane - 1; l <= ego.lane + 1; ++l) {
    const auto it = lanes_.find(l);
    if (it == lanes_.end()) continue;
    const Lane& lane = it->second;
    auto first = std::partition_point(lane.begin(), lane.end(),
                                      [&](const Agent& a) { return a.state.position > far; });
    for (; first != lane.end() && first->state.position >= ego.position; ++first) {
      if (first->state.id != ego.id) out.push_back(first->state);
    }
  }
  return out;
}

void Simulation::record_mode(Agent& a, const ControllerOutput& out,
                             const std::optional<LeadMeasurement>& lead) {
  ControlledState& c = *a.ctrl;
  const double dt = cfg_.dt;
  ModeStats& mine = report_.per_vehicle[a.state.id];
  if (c.prev_mode && *c.prev_mode != out.mode) {
    const std::string key = std::string(to_string(*c.prev_mode)) + "->" + std::string(to_string(out.mode));
    ++mine.transitions[key];
    ++report_.overall.transitions[key];
  }
  c.prev_mode = out.mode;
  if (out.mode == Mode::Disengaged) return;
  for (ModeStats* s : {&mine, &report_.overall}) {
    s->time[out.mode] += dt;
    s->engaged_time += dt;
    if (lead) {
      const double h = barrier(lead->s, a.state.velocity, cfg_.controller);
      s->min_h = s->min_h ? std::min(*s->min_h, h) : h;
      s->min_gap = s->min_gap ? std::min(*s->min_gap, lead->s) : lead->s;
    }
  }
}

double Simulation::controlled_accel(Agent& a, const Agent* leader, double t) {
  ControlledState& c = *a.ctrl;
  VehicleState& ego = a.state;

  const bool engaged =
      t + kEps >= c.engage_at && !(c.disengage_at && t + kEps >= *c.disengage_at);
  if (engaged != c.engaged) {
    log_.events.push_back({t, engaged ? "engage" : "disengage", ego.id, ""});
    c.engaged = engaged;
  }
  ego.engaged = engaged;

  const std::vector<VehicleState> candidates = radar_candidates(ego);
  const RadarFrame frame = synthesize_radar(ego, candidates, cfg_.radar, t,
                                            cfg_.radar.rel_speed_noise > 0.0 ? &rng_ : nullptr);
  c.v_pr = c.estimator.update(frame, ego.velocity);
  const auto lead = lead_vehicle(frame, ego.velocity);

  ControlInputs in;
  in.engaged = engaged;
  in.driver_setpoint = c.driver_setpoint;
  in.v = ego.velocity;
  in.v_pr = c.v_pr;
  in.lead = lead;
  const auto& inf = cfg_.infrastructure;
  if (inf.fixed_v_gr) {
    in.in_corridor = true;
    in.vsl_valid = true;
    in.v_gr = *inf.fixed_v_gr;
    c.reading = {"fixed", *inf.fixed_v_gr, true, t};
  } else if (inf.enabled) {
    const auto res = c.vsl.update(t, cfg_.road.mile_marker(ego.position), map_, feed_);
    if (res.reading.gantry_id != c.reading.gantry_id && !res.reading.gantry_id.empty()) {
      log_.events.push_back({t, "gantry", ego.id, res.reading.gantry_id});
    }
    if (res.in_corridor != c.in_corridor) {
      log_.events.push_back({t, res.in_corridor ? "corridor_enter" : "corridor_exit", ego.id, ""});
    }
    if (res.reading.valid && (!c.reading.valid || res.reading.v_gr != c.reading.v_gr)) {
      std::ostringstream os;
      os << res.reading.gantry_id << ' ' << std::lround(mps_to_mph(res.reading.v_gr)) << "mph";
      log_.events.push_back({t, "vsl", ego.id, os.str()});
    }
    c.reading = res.reading;
    c.in_corridor = res.in_corridor;
    in.in_corridor = res.in_corridor;
    in.vsl_valid = res.reading.valid;
    in.v_gr = res.reading.v_gr;
  }

  const ControllerOutput out = c.controller.step(in);
  if (c.last && c.last->mode != out.mode) {
    log_.events.push_back({t, "mode", ego.id,
                           std::string(to_string(c.last->mode)) + "->" + std::string(to_string(out.mode))});
  }
  c.last = out;
  record_mode(a, out, lead);
  if (engaged) return out.u;
  return human_accel(a, leader, t);
}

void Simulation::handle_inflows(double t) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (std::size_t k = 0; k < cfg_.inflows.size(); ++k) {
    const Inflow& f = cfg_.inflows[k];
    double& next = next_inflow_[static_cast<int>(k)];
    if (t + kEps < next) continue;
    Lane& lane = lanes_[f.lane];
    double v = f.speed;
    if (!lane.empty()) {
      const VehicleState& back = lane.back().state;
      v = std::min(v, back.velocity + 2.0);
      if (back.rear() < cfg_.human.s0 + v * cfg_.human.T) continue;
    }
    lane.push_back(make_human(next_id_++, VehicleKind::Human, f.lane, 0.0, v));
    next += 3600.0 / f.rate_vph * (1.0 + f.jitter * uni(rng_));
  }
}

void Simulation::remove_exited(double t) {
  for (auto& [lane_id, lane] : lanes_) {
    while (!lane.empty() && lane.front().state.position > cfg_.road.length) {
      if (lane.front().ctrl) log_.events.push_back({t, "exit", lane.front().state.id, ""});
      lane.pop_front();
    }
  }
}

bool Simulation::check_collisions(double t) {
  for (const auto& [lane_id, lane] : lanes_) {
    for (std::size_t i = 1; i < lane.size(); ++i) {
      if (gap(lane[i].state, lane[i - 1].state) <= 0.0) {
        std::ostringstream os;
        os << "vehicle " << lane[i].state.id << " hit " << lane[i - 1].state.id << " in lane "
           << lane_id;
        report_.collision = true;
        report_.collision_detail = os.str();
        log_.events.push_back({t, "collision", lane[i].state.id, os.str()});
        return true;
      }
    }
  }
  return false;
}

void Simulation::log_state(double t) {
  for (const auto& [lane_id, lane] : lanes_) {
    for (const Agent& a : lane) {
      const VehicleState& s = a.state;
      if (!a.ctrl && s.kind != VehicleKind::Probe && !cfg_.log.humans) continue;
      LogRow r;
      r.t = t;
      r.vehicle_id = s.id;
      r.kind = s.kind;
      r.position_m = s.position;
      r.mile_marker = cfg_.road.mile_marker(s.position);
      r.velocity_mps = s.velocity;
      r.u = a.accel;
      if (a.ctrl && a.ctrl->last) {
        r.mode = a.ctrl->last->mode;
        r.v_des = a.ctrl->last->v_des;
        if (a.ctrl->reading.valid) r.v_gr = a.ctrl->reading.v_gr;
        r.v_pr = a.ctrl->v_pr;
      }
      log_.rows.push_back(r);
    }
  }
}

void Simulation::sample_rds(double t) {
  const auto it = lanes_.find(cfg_.log.rds_lane);
  if (it == lanes_.end()) return;
  for (const Agent& a : it->second) {
    rds_samples_.push_back({t, cfg_.road.mile_marker(a.state.position), a.state.velocity});
  }
}

bool Simulation::step() {
  if (halted_) return false;
  const double t = time();
  if (t >= cfg_.duration - kEps) {
    halted_ = true;
    return false;
  }
  update_infrastructure(t);
  for (auto& [lane_id, lane] : lanes_) {
    for (std::size_t i = 0; i < lane.size(); ++i) {
      const Agent* leader = i > 0 ? &lane[i - 1] : nullptr;
      Agent& a = lane[i];
      a.accel = a.ctrl ? controlled_accel(a, leader, t) : human_accel(a, leader, t);
    }
  }
  if (step_ % log_every_ == 0) log_state(t);
  if (rds_every_ > 0 && step_ % rds_every_ == 0) sample_rds(t);

  for (auto& [lane_id, lane] : lanes_) {
    for (Agent& a : lane) {
      a.state.velocity = std::max(0.0, a.state.velocity + a.accel * cfg_.dt);
      a.state.position += a.state.velocity * cfg_.dt;
    }
  }
  ++step_;
  report_.simulated_time = time();
  const double t1 = time();
  if (check_collisions(t1)) {
    halted_ = true;
    return false;
  }
  remove_exited(t1);
  handle_inflows(t1);

  if (cfg_.stop_when_controlled_exit && !report_.per_vehicle.empty()) {
    bool any = false;
    for (const auto& [lane_id, lane] : lanes_) {
      for (const Agent& a : lane) any = any || a.ctrl.has_value();
    }
    if (!any) {
      halted_ = true;
      return false;
    }
  }
  return true;
}

void Simulation::run_to_end() {
  while (step()) {
  }
}

std::vector<VehicleState> Simulation::vehicles() const {
  std::vector<VehicleState> out;
  for (const auto& [lane_id, lane] : lanes_) {
    for (const Agent& a : lane) out.push_back(a.state);
  }
  return out;
}

std::optional<VehicleState> Simulation::vehicle(int id) const {
  for (const auto& [lane_id, lane] : lanes_) {
    for (const Agent& a : lane) {
      if (a.state.id == id) return a.state;
    }
  }
  return std::nullopt;
}

std::optional<ControllerOutput> Simulation::last_output(int id) const {
  for (const auto& [lane_id, lane] : lanes_) {
    for (const Agent& a : lane) {
      if (a.state.id == id && a.ctrl) return a.ctrl->last;
    }
  }
  return std::nullopt;
}

std::optional<double> Simulation::last_v_pr(int id) const {
  for (const auto& [lane_id, lane] : lanes_) {
    for (const Agent& a : lane) {
      if (a.state.id == id && a.ctrl) return a.ctrl->v_pr;
    }
  }
  return std::nullopt;
}

RunResult Simulation::take_result() {
  RunResult r;
  r.log = std::move(log_);
  r.report = report_;
  r.rds_samples = std::move(rds_samples_);
  log_ = {};
  rds_samples_.clear();
  return r;
}

RunResult run(const ScenarioConfig& cfg) {
  Simulation sim(cfg);
  sim.run_to_end();
  return sim.take_result();
}

}  // namespace middleway

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

#include "middleway/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "middleway/errors.hpp"

namespace middleway {

namespace {

using Json = nlohmann::ordered_json;

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

/// Reads known keys out of one JSON object and rejects the rest.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "expected an object");
  }

  const Json* find(std::string_view key) {
    seen_.insert(std::string(key));
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(std::string_view key, double& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(join(path_, key), "expected a number");
      out = v->get<double>();
    }
  }

  void optional_number(std::string_view key, std::optional<double>& out) {
    if (const Json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      if (!v->is_number()) throw ConfigError(join(path_, key), "expected a number or null");
      out = v->get<double>();
    }
  }

  template <class Int>
  void integer(std::string_view key, Int& out) {
    if (const Json* v = find(key)) {
      const double x = v->is_number() ? v->get<double>() : NAN;
      if (!v->is_number() || std::floor(x) != x) throw ConfigError(join(path_, key), "expected an integer");
      if constexpr (std::is_unsigned_v<Int>) {
        if (x < 0) throw ConfigError(join(path_, key), "must be >= 0");
        out = v->is_number_unsigned() ? v->get<Int>() : static_cast<Int>(x);
      } else {
        out = static_cast<Int>(x);
      }
    }
  }

  void boolean(std::string_view key, bool& out) {
    if (const Json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(join(path_, key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(std::string_view key, std::string& out) {
    if (const Json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(join(path_, key), "expected a string");
      out = v->get<std::string>();
    }
  }

  template <class Fn>
  void object(std::string_view key, Fn&& fn) {
    if (const Json* v = find(key)) {
      Section s(*v, join(path_, key));
      fn(s);
      s.finish();
    }
  }

  template <class T, class Fn>
  void array(std::string_view key, std::vector<T>& out, Fn&& fn) {
    if (const Json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(join(path_, key), "expected an array");
      out.clear();
      for (std::size_t k = 0; k < v->size(); ++k) {
        Section s((*v)[k], join(path_, key) + "." + std::to_string(k));
        T item{};
        fn(s, item);
        s.finish();
        out.push_back(item);
      }
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(join(path_, key), "unknown key");
    }
  }

  const std::string& path() const { return path_; }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json to_json(const ScenarioConfig& c) {
  Json j;
  j["simulation"] = {{"duration", c.duration},
                     {"dt", c.dt},
                     {"seed", c.seed},
                     {"stop_when_controlled_exit", c.stop_when_controlled_exit}};
  Json bias = Json::object();
  for (const auto& [lane, b] : c.road.lane_speed_bias) bias[std::to_string(lane)] = b;
  j["road"] = {{"length", c.road.length},
               {"origin_mile_marker", c.road.origin_mile_marker},
               {"direction", to_string(c.road.direction)},
               {"lane_speed_bias", bias}};
  j["human"] = {{"v0", c.human.v0}, {"T", c.human.T},         {"a", c.human.a},
                {"b", c.human.b},   {"s0", c.human.s0},       {"delta", c.human.delta},
                {"max_decel", c.human.max_decel}, {"v0_std", c.human_v0_std}};
  const ControllerConfig& k = c.controller;
  j["controller"] = {{"k_p", k.k_p},
                     {"k_cbf", k.k_cbf},
                     {"t_min", k.t_min},
                     {"s_min", k.s_min},
                     {"v_offset", k.v_offset},
                     {"v_des_max", k.v_des_max ? Json(*k.v_des_max) : Json(nullptr)},
                     {"ramp_rate", k.ramp_rate},
                     {"u_min", k.u_min},
                     {"u_max", k.u_max}};
  j["perception"] = {{"range", c.radar.range},
                     {"rel_speed_noise", c.radar.rel_speed_noise},
                     {"window_duration", c.prevailing.window_duration},
                     {"min_count", c.prevailing.min_count},
                     {"use_adjacent_lanes", c.prevailing.use_adjacent_lanes}};
  const InfrastructureConfig& in = c.infrastructure;
  j["infrastructure"] = {{"enabled", in.enabled},
                         {"mm_lo", in.mm_lo},
                         {"mm_hi", in.mm_hi},
                         {"gantry_spacing_mi", in.gantry_spacing_mi},
                         {"map_file", in.map_file},
                         {"fixed_v_gr", in.fixed_v_gr ? Json(*in.fixed_v_gr) : Json(nullptr)},
                         {"segment_mi", in.segment_mi},
                         {"activation_mph", in.vsl.activation_mph},
                         {"buffer_mph", in.vsl.buffer_mph},
                         {"min_mph", in.vsl.min_mph},
                         {"max_mph", in.vsl.max_mph},
                         {"max_change_mph", in.vsl.max_change_mph},
                         {"update_period", in.vsl.update_period},
                         {"lookahead_mi", in.vsl.lookahead_mi},
                         {"latency", in.feed.latency},
                         {"dropout", in.feed.dropout},
                         {"staleness", in.feed.staleness},
                         {"acquire_radius_mi", in.client.acquire_radius_mi},
                         {"poll_period", in.client.poll_period},
                         {"heading_window", in.client.heading_window}};
  Json pulses = Json::array();
  for (const WavePulse& p : c.waves.pulses) {
    pulses.push_back({{"vehicle_id", p.vehicle_id},
                      {"start", p.start},
                      {"duration", p.duration},
                      {"target_speed", p.target_speed},
                      {"decel", p.decel}});
  }
  Json zones = Json::array();
  for (const Bottleneck& b : c.waves.bottlenecks) {
    zones.push_back({{"position_start", b.position_start},
                     {"position_end", b.position_end},
                     {"start", b.start},
                     {"period", b.period},
                     {"low_speed", b.low_speed},
                     {"high_speed", b.high_speed}});
  }
  j["waves"] = {{"pulses", pulses}, {"bottlenecks", zones}};
  Json traffic = Json::array();
  for (const TrafficBlock& b : c.traffic) {
    traffic.push_back({{"lane", b.lane},
                       {"count", b.count},
                       {"front_position", b.front_position},
                       {"spacing", b.spacing},
                       {"speed", b.speed}});
  }
  j["traffic"] = traffic;
  Json inflows = Json::array();
  for (const Inflow& f : c.inflows) {
    inflows.push_back({{"lane", f.lane}, {"rate_vph", f.rate_vph}, {"speed", f.speed}, {"jitter", f.jitter}});
  }
  j["inflows"] = inflows;
  Json vehicles = Json::array();
  for (const VehicleSpec& v : c.vehicles) {
    vehicles.push_back({{"id", v.id},
                        {"kind", to_string(v.kind)},
                        {"lane", v.lane},
                        {"position", v.position},
                        {"velocity", v.velocity},
                        {"driver_setpoint", v.driver_setpoint},
                        {"engage_at", v.engage_at},
                        {"disengage_at", v.disengage_at ? Json(*v.disengage_at) : Json(nullptr)}});
  }
  j["vehicles"] = vehicles;
  j["log"] = {{"interval", c.log.interval},
              {"humans", c.log.humans},
              {"rds_sample_interval", c.log.rds_sample_interval},
              {"rds_lane", c.log.rds_lane}};
  return j;
}

ScenarioConfig from_json(const Json& j, ScenarioConfig c) {
  Section root(j, "");
  root.object("simulation", [&](Section& s) {
    s.number("duration", c.duration);
    s.number("dt", c.dt);
    s.integer("seed", c.seed);
    s.boolean("stop_when_controlled_exit", c.stop_when_controlled_exit);
  });
  root.object("road", [&](Section& s) {
    s.number("length", c.road.length);
    s.number("origin_mile_marker", c.road.origin_mile_marker);
    std::string dir(to_string(c.road.direction));
    s.string("direction", dir);
    const auto d = parse_direction(dir);
    if (!d) throw ConfigError("road.direction", "expected eastbound or westbound");
    c.road.direction = *d;
    if (const Json* bias = s.find("lane_speed_bias")) {
      if (!bias->is_object()) throw ConfigError("road.lane_speed_bias", "expected an object");
      c.road.lane_speed_bias.clear();
      for (const auto& [lane, value] : bias->items()) {
        const std::string field = "road.lane_speed_bias." + lane;
        if (!value.is_number()) throw ConfigError(field, "expected a number");
        try {
          std::size_t used = 0;
          const int id = std::stoi(lane, &used);
          if (used != lane.size()) throw std::invalid_argument(lane);
          c.road.lane_speed_bias[id] = value.get<double>();
        } catch (const std::logic_error&) {
          throw ConfigError(field, "lane must be an integer");
        }
      }
    }
  });
  root.object("human", [&](Section& s) {
    s.number("v0", c.human.v0);
    s.number("T", c.human.T);
    s.number("a", c.human.a);
    s.number("b", c.human.b);
    s.number("s0", c.human.s0);
    s.number("delta", c.human.delta);
    s.number("max_decel", c.human.max_decel);
    s.number("v0_std", c.human_v0_std);
  });
  root.object("controller", [&](Section& s) {
    ControllerConfig& k = c.controller;
    s.number("k_p", k.k_p);
    s.number("k_cbf", k.k_cbf);
    s.number("t_min", k.t_min);
    s.number("s_min", k.s_min);
    s.number("v_offset", k.v_offset);
    s.optional_number("v_des_max", k.v_des_max);
    s.number("ramp_rate", k.ramp_rate);
    s.number("u_min", k.u_min);
    s.number("u_max", k.u_max);
  });
  root.object("perception", [&](Section& s) {
    s.number("range", c.radar.range);
    s.number("rel_speed_noise", c.radar.rel_speed_noise);
    s.number("window_duration", c.prevailing.window_duration);
    s.integer("min_count", c.prevailing.min_count);
    s.boolean("use_adjacent_lanes", c.prevailing.use_adjacent_lanes);
  });
  root.object("infrastructure", [&](Section& s) {
    InfrastructureConfig& in = c.infrastructure;
    s.boolean("enabled", in.enabled);
    s.number("mm_lo", in.mm_lo);
    s.number("mm_hi", in.mm_hi);
    s.number("gantry_spacing_mi", in.gantry_spacing_mi);
    s.string("map_file", in.map_file);
    s.optional_number("fixed_v_gr", in.fixed_v_gr);
    s.number("segment_mi", in.segment_mi);
    s.number("activation_mph", in.vsl.activation_mph);
    s.number("buffer_mph", in.vsl.buffer_mph);
    s.integer("min_mph", in.vsl.min_mph);
    s.integer("max_mph", in.vsl.max_mph);
    s.integer("max_change_mph", in.vsl.max_change_mph);
    s.number("update_period", in.vsl.update_period);
    s.number("lookahead_mi", in.vsl.lookahead_mi);
    s.number("latency", in.feed.latency);
    s.number("dropout", in.feed.dropout);
    s.number("staleness", in.feed.staleness);
    s.number("acquire_radius_mi", in.client.acquire_radius_mi);
    s.number("poll_period", in.client.poll_period);
    s.number("heading_window", in.client.heading_window);
  });
  root.object("waves", [&](Section& s) {
    s.array("pulses", c.waves.pulses, [](Section& e, WavePulse& p) {
      e.integer("vehicle_id", p.vehicle_id);
      e.number("start", p.start);
      e.number("duration", p.duration);
      e.number("target_speed", p.target_speed);
      e.number("decel", p.decel);
    });
    s.array("bottlenecks", c.waves.bottlenecks, [](Section& e, Bottleneck& b) {
      e.number("position_start", b.position_start);
      e.number("position_end", b.position_end);
      e.number("start", b.start);
      e.number("period", b.period);
      e.number("low_speed", b.low_speed);
      e.number("high_speed", b.high_speed);
    });
  });
  root.array("traffic", c.traffic, [](Section& e, TrafficBlock& b) {
    e.integer("lane", b.lane);
    e.integer("count", b.count);
    e.number("front_position", b.front_position);
    e.number("spacing", b.spacing);
    e.number("speed", b.speed);
  });
  root.array("inflows", c.inflows, [](Section& e, Inflow& f) {
    e.integer("lane", f.lane);
    e.number("rate_vph", f.rate_vph);
    e.number("speed", f.speed);
    e.number("jitter", f.jitter);
  });
  root.array("vehicles", c.vehicles, [](Section& e, VehicleSpec& v) {
    e.integer("id", v.id);
    std::string kind(to_string(v.kind));
    e.string("kind", kind);
    const auto parsed = parse_vehicle_kind(kind);
    if (!parsed) throw ConfigError(e.path() + ".kind", "expected human, controlled or probe");
    v.kind = *parsed;
    e.integer("lane", v.lane);
    e.number("position", v.position);
    e.number("velocity", v.velocity);
    e.number("driver_setpoint", v.driver_setpoint);
    e.number("engage_at", v.engage_at);
    e.optional_number("disengage_at", v.disengage_at);
  });
  root.object("log", [&](Section& s) {
    s.number("interval", c.log.interval);
    s.boolean("humans", c.log.humans);
    s.number("rds_sample_interval", c.log.rds_sample_interval);
    s.integer("rds_lane", c.log.rds_lane);
  });
  root.finish();
  return c;
}

// Objects merge key by key; anything else replaces.
void merge(Json& base, const Json& patch) {
  if (!base.is_object() || !patch.is_object()) {
    base = patch;
    return;
  }
  for (const auto& [key, value] : patch.items()) {
    if (base.contains(key)) {
      merge(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

void apply_override(Json& doc, const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(text, "override must look like key=value");
  }
  const std::string key = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  Json* node = &doc;
  std::string path;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError(key, "empty path segment");
    path = join(path, part);
    if (node->is_array()) {
      std::size_t index = 0;
      try {
        std::size_t used = 0;
        index = std::stoul(part, &used);
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::logic_error&) {
        throw ConfigError(path, "expected an array index");
      }
      if (index > node->size()) throw ConfigError(path, "index out of range");
      if (index == node->size()) node->push_back(Json::object());
      node = &(*node)[index];
    } else if (node->is_object()) {
      node = &(*node)[part];
    } else {
      throw ConfigError(path, "cannot descend into a scalar");
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

Json stats_json(const ModeStats& m) {
  Json occupancy = Json::object();
  for (const Mode mode : kAllModes) occupancy[std::string(to_string(mode))] = m.fraction(mode);
  Json transitions = Json::object();
  for (const auto& [name, n] : m.transitions) transitions[name] = n;
  return {{"engaged_time", m.engaged_time},
          {"occupancy", occupancy},
          {"transitions", transitions},
          {"min_h", m.min_h ? Json(*m.min_h) : Json(nullptr)},
          {"min_gap", m.min_gap ? Json(*m.min_gap) : Json(nullptr)}};
}

}  // namespace

std::string report_to_json(const RunReport& report, const ScenarioConfig& cfg) {
  Json j;
  j["seed"] = report.seed;
  j["collision"] = report.collision;
  j["collision_detail"] = report.collision_detail;
  j["simulated_time"] = report.simulated_time;
  j["overall"] = stats_json(report.overall);
  Json per = Json::object();
  for (const auto& [id, m] : report.per_vehicle) per[std::to_string(id)] = stats_json(m);
  j["per_vehicle"] = per;
  j["config"] = to_json(cfg);
  return j.dump(2) + "\n";
}

std::string scenario_to_json(const ScenarioConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

ScenarioConfig parse_scenario(std::string_view json_text, std::span<const std::string> overrides) {
  const ScenarioConfig base = canonical_scenario();
  Json doc = to_json(base);
  if (!json_text.empty()) {
    Json patch = Json::parse(json_text.begin(), json_text.end(), nullptr, false);
    if (patch.is_discarded()) throw ConfigError("config", "not valid JSON");
    if (!patch.is_object()) throw ConfigError("config", "expected an object");
    merge(doc, patch);
  }
  for (const std::string& o : overrides) apply_override(doc, o);
  ScenarioConfig cfg = from_json(doc, base);
  validate(cfg);
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path, std::span<const std::string> overrides) {
  if (path.empty()) return parse_scenario({}, overrides);
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  const std::string s = text.str();
  if (s.find_first_not_of(" \t\r\n") == std::string::npos) throw ConfigError(path, "empty config file");
  return parse_scenario(s, overrides);
}

}  // namespace middleway

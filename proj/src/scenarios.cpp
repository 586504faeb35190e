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
#include <cmath>

#include "middleway/simulation.hpp"
#include "middleway/units.hpp"

namespace middleway {

ScenarioConfig canonical_scenario() {
  ScenarioConfig c;
  c.duration = 1800.0;
  c.dt = 0.05;
  c.seed = 1;

  // x = 0 at MM 71, one mile upstream of the corridor.
  c.road.origin_mile_marker = 71.0;
  c.road.direction = Direction::Westbound;
  c.road.length = miles_to_meters(71.0 - 63.0);

  c.infrastructure.mm_lo = 53.0;
  c.infrastructure.mm_hi = 70.0;

  const double bottleneck_x = miles_to_meters(71.0 - 64.0);
  c.waves.bottlenecks.push_back({bottleneck_x, bottleneck_x + 300.0, 0.0, 300.0, 2.0, 33.0});

  const double queue_length = 2000.0;
  for (int lane : {0, 1}) {
    c.traffic.push_back({lane, static_cast<int>(queue_length / 12.0), bottleneck_x, 12.0, 3.0});
    c.traffic.push_back({lane, 80, bottleneck_x - queue_length - 100.0, 100.0, 32.0});
    c.traffic.push_back({lane, 15, c.road.length - 50.0, 100.0, 32.0});
    c.inflows.push_back({lane, 1100.0, 32.0, 0.2});
  }

  // Two probe/controlled pairs entering from upstream.
  c.vehicles.push_back({1, VehicleKind::Probe, 0, 900.0, 30.0, 33.5, 0.0, std::nullopt});
  c.vehicles.push_back({2, VehicleKind::Controlled, 0, 800.0, 30.0, 33.5, 0.0, std::nullopt});
  c.vehicles.push_back({3, VehicleKind::Probe, 0, 400.0, 30.0, 33.5, 0.0, std::nullopt});
  c.vehicles.push_back({4, VehicleKind::Controlled, 0, 300.0, 30.0, 33.5, 0.0, std::nullopt});
  return c;
}

StringResult string_experiment(const ScenarioConfig& base, const StringConfig& s) {
  ScenarioConfig c = base;
  c.vehicles.clear();
  c.traffic.clear();
  c.inflows.clear();
  c.waves = {};
  c.infrastructure.fixed_v_gr = s.v_gr;
  c.human_v0_std = 0.0;
  c.human.v0 = std::max(c.human.v0, s.traffic_speed + 5.0);
  c.duration = s.horizon;
  c.stop_when_controlled_exit = false;
  c.log.humans = false;

  const double front = 1000.0 + s.spacing * s.n_controlled +
                       s.traffic_spacing * std::max(0, s.traffic_vehicles - 1);
  c.road.length = front + s.horizon * (s.traffic_speed + 10.0) + 1000.0;
  int id = 1;
  for (int k = 0; k < s.traffic_vehicles; ++k, ++id) {
    c.vehicles.push_back({id, VehicleKind::Human, 0, front - k * s.traffic_spacing, s.traffic_speed,
                          33.5, 0.0, std::nullopt});
    // Hold the prevailing traffic at exactly traffic_speed.
    c.waves.pulses.push_back({id, 0.0, s.horizon + 1.0, s.traffic_speed, 3.0});
  }
  const double first = front - std::max(0, s.traffic_vehicles - 1) * s.traffic_spacing - s.spacing;
  StringResult out;
  for (int k = 0; k < s.n_controlled; ++k, ++id) {
    const VehicleSpec v{id, VehicleKind::Controlled, 0, first - k * s.spacing, s.traffic_speed,
                        std::max(33.5, s.traffic_speed + 3.5), 0.0, std::nullopt};
    c.vehicles.push_back(v);
    out.vehicle_ids.push_back(id);
  }

  const RunResult r = run(c);
  out.collision = r.report.collision;
  const std::size_t n = out.vehicle_ids.size();
  out.v_des.assign(n, {});
  out.velocity.assign(n, {});
  out.mode.assign(n, {});
  std::map<int, std::size_t> index;
  for (std::size_t k = 0; k < n; ++k) index[out.vehicle_ids[k]] = k;
  for (const LogRow& row : r.log.rows) {
    const auto it = index.find(row.vehicle_id);
    if (it == index.end() || !row.v_des || !row.mode) continue;
    if (it->second == 0) out.t.push_back(row.t);
    out.v_des[it->second].push_back(*row.v_des);
    out.velocity[it->second].push_back(row.velocity_mps);
    out.mode[it->second].push_back(*row.mode);
  }
  const double t_end = out.t.empty() ? 0.0 : out.t.back();
  for (std::size_t k = 0; k < n; ++k) {
    double sum = 0.0;
    int cnt = 0;
    for (std::size_t i = 0; i < out.v_des[k].size() && i < out.t.size(); ++i) {
      if (out.t[i] >= t_end - s.settle_window - 1e-9) {
        sum += out.v_des[k][i];
        ++cnt;
      }
    }
    out.steady_v_des.push_back(cnt > 0 ? sum / cnt : 0.0);
  }
  return out;
}

}  // namespace middleway

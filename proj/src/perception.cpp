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

#include "middleway/perception.hpp"

#include <algorithm>
#include <cstdlib>

namespace middleway {

std::string_view to_string(VehicleKind kind) {
  switch (kind) {
    case VehicleKind::Human: return "human";
    case VehicleKind::Controlled: return "controlled";
    case VehicleKind::Probe: return "probe";
  }
  return "?";
}

std::optional<VehicleKind> parse_vehicle_kind(std::string_view text) {
  for (auto k : {VehicleKind::Human, VehicleKind::Controlled, VehicleKind::Probe}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

RadarFrame synthesize_radar(const VehicleState& ego, std::span<const VehicleState> others,
                            const RadarConfig& cfg, double now, std::mt19937_64* rng) {
  RadarFrame frame;
  frame.timestamp = now;
  for (const VehicleState& other : others) {
    if (other.id == ego.id) continue;
    const int lane_offset = other.lane - ego.lane;
    if (std::abs(lane_offset) > 1) continue;
    const double d = gap(ego, other);
    if (d < 0.0 || d > cfg.range) continue;
    frame.targets.push_back({d, other.velocity - ego.velocity, lane_offset, now, other.id});
  }
  auto closer = [](const RadarTarget& a, const RadarTarget& b) {
    if (a.rel_position != b.rel_position) return a.rel_position < b.rel_position;
    return a.vehicle_id < b.vehicle_id;
  };
  if (frame.targets.size() > kMaxRadarTargets) {
    std::partial_sort(frame.targets.begin(),
                      frame.targets.begin() + static_cast<std::ptrdiff_t>(kMaxRadarTargets),
                      frame.targets.end(), closer);
    frame.targets.resize(kMaxRadarTargets);
  } else {
    std::sort(frame.targets.begin(), frame.targets.end(), closer);
  }
  if (rng != nullptr && cfg.rel_speed_noise > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.rel_speed_noise);
    for (RadarTarget& t : frame.targets) t.rel_speed += noise(*rng);
  }
  return frame;
}

std::optional<LeadMeasurement> lead_vehicle(const RadarFrame& frame, double v_ego) {
  for (const RadarTarget& t : frame.targets) {
    if (t.lane_offset == 0) return LeadMeasurement{t.rel_position, v_ego + t.rel_speed};
  }
  return std::nullopt;
}

PrevailingEstimator::PrevailingEstimator(PrevailingConfig cfg) : cfg_(cfg) {}

double PrevailingEstimator::update(const RadarFrame& frame, double v_ego) {
  for (const RadarTarget& t : frame.targets) {
    if (t.rel_speed <= 0.0) continue;
    if (!cfg_.use_adjacent_lanes && t.lane_offset != 0) continue;
    window_.push_back({frame.timestamp, v_ego + t.rel_speed});
  }
  const double oldest = frame.timestamp - cfg_.window_duration;
  while (!window_.empty() && window_.front().timestamp < oldest) window_.pop_front();

  if (window_.empty() || window_.size() < cfg_.min_count) {
    estimate_ = 0.0;
  } else {
    double sum = 0.0;
    for (const PrevailingSample& s : window_) sum += s.speed;
    estimate_ = sum / static_cast<double>(window_.size());
  }
  return estimate_;
}

double PrevailingEstimator::estimate() const { return estimate_; }

}  // namespace middleway

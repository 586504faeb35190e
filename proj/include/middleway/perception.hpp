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

#ifndef MIDDLEWAY_PERCEPTION_HPP
#define MIDDLEWAY_PERCEPTION_HPP

#include <cstddef>
#include <deque>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "middleway/controller.hpp"
#include "middleway/vehicle.hpp"

namespace middleway {

inline constexpr std::size_t kMaxRadarTargets = 16;

struct RadarTarget {
  double rel_position = 0.0;  // gap to the target's rear, m
  double rel_speed = 0.0;     // target speed minus ego speed, m/s
  int lane_offset = 0;        // 0 ego lane, +-1 adjacent
  double timestamp = 0.0;
  int vehicle_id = 0;         // simulation ground truth, not used by estimators
};

/// Targets sorted by rel_position ascending, at most kMaxRadarTargets.
struct RadarFrame {
  double timestamp = 0.0;
  std::vector<RadarTarget> targets;
};

struct RadarConfig {
  double range = 120.0;          // m
  double rel_speed_noise = 0.0;  // std dev of zero-mean Gaussian, m/s
};

/// Up to 16 nearest vehicles ahead of `ego` within `range` in the ego and
/// adjacent lanes. Ties in distance are broken by vehicle id. Noise is only
/// applied when `rng` is given and the configured sigma is positive.
RadarFrame synthesize_radar(const VehicleState& ego, std::span<const VehicleState> others,
                            const RadarConfig& cfg, double now,
                            std::mt19937_64* rng = nullptr);

/// Nearest ego-lane target as a CBF measurement.
std::optional<LeadMeasurement> lead_vehicle(const RadarFrame& frame, double v_ego);

struct PrevailingConfig {
  double window_duration = 5.0;  // s
  std::size_t min_count = 5;
  bool use_adjacent_lanes = true;
};

struct PrevailingSample {
  double timestamp = 0.0;
  double speed = 0.0;  // absolute, m/s
};

/// Rolling point cloud of faster-than-ego radar returns. The estimate is the
/// window mean, or 0 ("off") while fewer than min_count samples are held.
class PrevailingEstimator {
 public:
  explicit PrevailingEstimator(PrevailingConfig cfg = {});

  /// Frames must arrive with non-decreasing timestamps.
  double update(const RadarFrame& frame, double v_ego);

  double estimate() const;
  const std::deque<PrevailingSample>& window() const { return window_; }
  const PrevailingConfig& config() const { return cfg_; }

 private:
  PrevailingConfig cfg_;
  std::deque<PrevailingSample> window_;
  double estimate_ = 0.0;
};

}  // namespace middleway

#endif  // MIDDLEWAY_PERCEPTION_HPP

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

#ifndef MIDDLEWAY_VEHICLE_HPP
#define MIDDLEWAY_VEHICLE_HPP

#include <optional>
#include <string_view>

namespace middleway {

enum class VehicleKind { Human, Controlled, Probe };

std::string_view to_string(VehicleKind kind);
std::optional<VehicleKind> parse_vehicle_kind(std::string_view text);

/// Longitudinal state. `position` is the front bumper, metres along the
/// direction of travel.
struct VehicleState {
  int id = 0;
  double position = 0.0;
  double velocity = 0.0;
  int lane = 0;
  VehicleKind kind = VehicleKind::Human;
  bool engaged = false;
  double length = 4.5;

  double rear() const { return position - length; }
};

/// Bumper-to-bumper gap from `follower` to `leader`.
inline double gap(const VehicleState& follower, const VehicleState& leader) {
  return leader.rear() - follower.position;
}

}  // namespace middleway

#endif  // MIDDLEWAY_VEHICLE_HPP

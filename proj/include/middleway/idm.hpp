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

#ifndef MIDDLEWAY_IDM_HPP
#define MIDDLEWAY_IDM_HPP

#include <optional>

#include "middleway/controller.hpp"

namespace middleway {

/// Intelligent Driver Model parameters for the human-driver surrogate.
struct IdmParams {
  double v0 = 33.5;  // desired speed, m/s
  double T = 1.2;    // time headway, s
  double a = 1.3;    // max acceleration, m/s^2
  double b = 2.0;    // comfortable deceleration, m/s^2
  double s0 = 2.0;   // jam distance, m
  double delta = 4.0;
  double max_decel = 9.0;  // physical braking limit, m/s^2
};

void validate(const IdmParams& p);

/// IDM acceleration. Above the desired speed the free-road term relaxes
/// toward v0 at no more than b instead of blowing up with (v/v0)^delta.
double idm_acceleration(double v, double v0, const std::optional<LeadMeasurement>& lead,
                        const IdmParams& p);

/// Steady-state gap at speed v (< v0) for identical vehicles.
double idm_equilibrium_gap(double v, const IdmParams& p);

}  // namespace middleway

#endif  // MIDDLEWAY_IDM_HPP

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

#include "middleway/idm.hpp"

#include <algorithm>
#include <cmath>

#include "middleway/errors.hpp"

namespace middleway {

void validate(const IdmParams& p) {
  auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
  if (!positive(p.v0)) throw ConfigError("human.v0", "must be > 0");
  if (!positive(p.T)) throw ConfigError("human.T", "must be > 0");
  if (!positive(p.a)) throw ConfigError("human.a", "must be > 0");
  if (!positive(p.b)) throw ConfigError("human.b", "must be > 0");
  if (!positive(p.s0)) throw ConfigError("human.s0", "must be > 0");
  if (!(std::isfinite(p.delta) && p.delta >= 1.0)) throw ConfigError("human.delta", "must be >= 1");
  if (!positive(p.max_decel)) throw ConfigError("human.max_decel", "must be > 0");
}

double idm_acceleration(double v, double v0, const std::optional<LeadMeasurement>& lead,
                        const IdmParams& p) {
  v0 = std::max(v0, 0.1);
  double free_term = 0.0;
  if (v <= v0) {
    free_term = p.a * (1.0 - std::pow(v / v0, p.delta));
  } else {
    free_term = -p.b * (1.0 - std::pow(v0 / v, p.a * p.delta / p.b));
  }
  double interaction = 0.0;
  if (lead) {
    const double s_star =
        p.s0 + std::max(0.0, v * p.T + v * (v - lead->v_l) / (2.0 * std::sqrt(p.a * p.b)));
    const double s = std::max(lead->s, 0.01);
    interaction = -p.a * (s_star / s) * (s_star / s);
  }
  return std::max(free_term + interaction, -p.max_decel);
}

double idm_equilibrium_gap(double v, const IdmParams& p) {
  return (p.s0 + v * p.T) / std::sqrt(1.0 - std::pow(v / p.v0, p.delta));
}

}  // namespace middleway

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

#ifndef MIDDLEWAY_CONTROLLER_HPP
#define MIDDLEWAY_CONTROLLER_HPP

#include <algorithm>
#include <optional>
#include <string_view>

namespace middleway {

/// Operating mode of the cooperative speed controller. Exactly one is
/// active per control step.
enum class Mode { Disengaged, Normal, VSL, Middleway, CBF };

inline constexpr Mode kAllModes[] = {Mode::Disengaged, Mode::Normal, Mode::VSL,
                                     Mode::Middleway, Mode::CBF};

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

enum class SetpointSource { CurrentSpeed, DriverSetpoint, Middleway };

struct ControllerConfig {
  double k_p = 0.8;
  double k_cbf = 0.1;    // 1/s
  double t_min = 2.0;    // s
  double s_min = 15.0;   // m
  double v_offset = 2.0; // m/s
  // Cap on the middleway setpoint. Unset means "use the driver setpoint".
  std::optional<double> v_des_max;
  double ramp_rate = 1.5;  // m/s per s
  double u_min = -3.0;     // m/s^2
  double u_max = 2.0;      // m/s^2
  double dt = 0.05;        // s
};

/// Throws ConfigError (see errors.hpp) naming the first offending field.
void validate(const ControllerConfig& cfg);

struct LeadMeasurement {
  double s = 0.0;    // bumper-to-bumper gap, m
  double v_l = 0.0;  // lead speed, m/s
};

struct ControlInputs {
  bool engaged = false;
  bool in_corridor = false;
  bool vsl_valid = false;
  double driver_setpoint = 0.0;
  double v = 0.0;
  double v_gr = 0.0;
  double v_pr = 0.0;  // 0 means the prevailing-speed estimator is off
  std::optional<LeadMeasurement> lead;
};

struct ControllerOutput {
  double u = 0.0;
  Mode mode = Mode::Disengaged;
  double v_des = 0.0;
  double v_ramp = 0.0;
  double u_nom = 0.0;
  std::optional<double> u_safe;
};

/// Carried between steps. `engaged` lets the ramp re-seed on engagement.
struct ControllerState {
  double v_ramp_prev = 0.0;
  bool engaged = false;
};

struct Setpoint {
  double v_des = 0.0;
  SetpointSource source = SetpointSource::CurrentSpeed;
};

// Control laws. Templated on the scalar so they can be evaluated on
// anything with ordinary arithmetic (double, long double, autodiff types).

/// min(max(v_pr - v_offset, v_gr), v_des_max). With the estimator off
/// (v_pr == 0) the max selects v_gr.
template <typename T>
T middleway(const T& v_pr, const T& v_gr, const T& v_offset, const T& v_des_max) {
  using std::max;
  using std::min;
  return min(max(T(v_pr - v_offset), v_gr), v_des_max);
}

/// Linear rate limiter: moves toward v_des by at most ramp_rate * dt.
template <typename T>
T ramp(const T& v_des, const T& v_ramp_prev, const T& ramp_rate, const T& dt) {
  const T max_step = ramp_rate * dt;
  return v_ramp_prev + std::clamp(T(v_des - v_ramp_prev), T(-max_step), max_step);
}

template <typename T>
T nominal(const T& v_ramp, const T& v, const T& k_p) {
  return k_p * (v_ramp - v);
}

/// Largest acceleration that keeps h = s - (t_min v + s_min) decaying no
/// faster than dh/dt = -k_cbf h.
template <typename T>
T cbf_limit(const T& s, const T& v, const T& v_l, const T& k_cbf, const T& t_min,
            const T& s_min) {
  return k_cbf / t_min * (s - (t_min * v + s_min)) + (v_l - v) / t_min;
}

// Config-taking conveniences over the laws above.
double middleway(double v_pr, double v_gr, const ControllerConfig& cfg,
                 double driver_setpoint);
double ramp(double v_des, double v_ramp_prev, const ControllerConfig& cfg);
double nominal(double v_ramp, double v, const ControllerConfig& cfg);
double cbf_limit(double s, double v, double v_l, const ControllerConfig& cfg);

/// Barrier value h = s - (t_min v + s_min).
double barrier(double s, double v, const ControllerConfig& cfg);

/// Resolved speed cap: cfg.v_des_max if set, else the driver setpoint.
double speed_cap(const ControllerConfig& cfg, double driver_setpoint);

/// Multiplexer over the three setpoint sources.
Setpoint select_setpoint(const ControlInputs& in, const ControllerConfig& cfg);

/// `u_filtered` is min(u_nom, u_safe) before actuator saturation; the CBF
/// binds when it is strictly below u_nom.
Mode classify_mode(const ControlInputs& in, double v_des, double u_nom,
                   double u_filtered);

struct StepResult {
  ControllerOutput output;
  ControllerState state;
};

/// One control period: setpoint -> ramp -> P control -> CBF filter -> clamp.
StepResult step_controller(const ControlInputs& in, const ControllerState& state,
                           const ControllerConfig& cfg);

/// Owns the carried ramp state for one vehicle.
class SpeedController {
 public:
  explicit SpeedController(ControllerConfig cfg);

  ControllerOutput step(const ControlInputs& in);
  void reset(double v);

  const ControllerConfig& config() const { return cfg_; }
  const ControllerState& state() const { return state_; }

 private:
  ControllerConfig cfg_;
  ControllerState state_;
};

}  // namespace middleway

#endif  // MIDDLEWAY_CONTROLLER_HPP

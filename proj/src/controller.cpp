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

#include "middleway/controller.hpp"

#include <cmath>
#include <string>

#include "middleway/errors.hpp"

namespace middleway {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Disengaged: return "Disengaged";
    case Mode::Normal: return "Normal";
    case Mode::VSL: return "VSL";
    case Mode::Middleway: return "Middleway";
    case Mode::CBF: return "CBF";
  }
  return "?";
}

std::optional<Mode> parse_mode(std::string_view text) {
  for (Mode m : kAllModes) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ConfigError(std::string("controller.") + field, what);
}

}  // namespace

void validate(const ControllerConfig& cfg) {
  require(std::isfinite(cfg.k_p) && cfg.k_p > 0, "k_p", "must be > 0");
  require(std::isfinite(cfg.k_cbf) && cfg.k_cbf > 0, "k_cbf", "must be > 0");
  require(std::isfinite(cfg.t_min) && cfg.t_min > 0, "t_min", "must be > 0");
  require(std::isfinite(cfg.s_min) && cfg.s_min >= 0, "s_min", "must be >= 0");
  require(std::isfinite(cfg.v_offset) && cfg.v_offset >= 0, "v_offset", "must be >= 0");
  require(!cfg.v_des_max || (std::isfinite(*cfg.v_des_max) && *cfg.v_des_max > 0),
          "v_des_max", "must be > 0");
  require(std::isfinite(cfg.ramp_rate) && cfg.ramp_rate > 0, "ramp_rate", "must be > 0");
  require(std::isfinite(cfg.u_min) && cfg.u_min < 0, "u_min", "must be < 0");
  require(std::isfinite(cfg.u_max) && cfg.u_max > 0, "u_max", "must be > 0");
  require(std::isfinite(cfg.dt) && cfg.dt > 0, "dt", "must be > 0");
}

double speed_cap(const ControllerConfig& cfg, double driver_setpoint) {
  return cfg.v_des_max.value_or(driver_setpoint);
}

double middleway(double v_pr, double v_gr, const ControllerConfig& cfg,
                 double driver_setpoint) {
  return middleway(v_pr, v_gr, cfg.v_offset, speed_cap(cfg, driver_setpoint));
}

double ramp(double v_des, double v_ramp_prev, const ControllerConfig& cfg) {
  return ramp(v_des, v_ramp_prev, cfg.ramp_rate, cfg.dt);
}

double nominal(double v_ramp, double v, const ControllerConfig& cfg) {
  return nominal(v_ramp, v, cfg.k_p);
}

double cbf_limit(double s, double v, double v_l, const ControllerConfig& cfg) {
  return cbf_limit(s, v, v_l, cfg.k_cbf, cfg.t_min, cfg.s_min);
}

double barrier(double s, double v, const ControllerConfig& cfg) {
  return s - (cfg.t_min * v + cfg.s_min);
}

Setpoint select_setpoint(const ControlInputs& in, const ControllerConfig& cfg) {
  if (!in.engaged) return {in.v, SetpointSource::CurrentSpeed};
  if (!in.in_corridor || !in.vsl_valid) {
    return {in.driver_setpoint, SetpointSource::DriverSetpoint};
  }
  return {middleway(in.v_pr, in.v_gr, cfg, in.driver_setpoint), SetpointSource::Middleway};
}

Mode classify_mode(const ControlInputs& in, double v_des, double u_nom,
                   double u_filtered) {
  if (!in.engaged) return Mode::Disengaged;
  if (in.lead && u_filtered < u_nom) return Mode::CBF;
  if (!in.in_corridor || !in.vsl_valid) return Mode::Normal;
  return v_des > in.v_gr ? Mode::Middleway : Mode::VSL;
}

StepResult step_controller(const ControlInputs& in, const ControllerState& state,
                           const ControllerConfig& cfg) {
  StepResult r;
  ControllerOutput& out = r.output;
  const Setpoint sp = select_setpoint(in, cfg);
  out.v_des = sp.v_des;
  if (in.lead) out.u_safe = cbf_limit(in.lead->s, in.v, in.lead->v_l, cfg);

  if (!in.engaged) {
    // Driver in control: command nothing, keep the ramp glued to v.
    out.v_ramp = in.v;
    out.u_nom = 0.0;
    out.u = 0.0;
    out.mode = Mode::Disengaged;
    r.state = {in.v, false};
    return r;
  }

  const double prev = state.engaged ? state.v_ramp_prev : in.v;
  out.v_ramp = ramp(sp.v_des, prev, cfg);
  out.u_nom = nominal(out.v_ramp, in.v, cfg);
  const double u_filtered = out.u_safe ? std::min(out.u_nom, *out.u_safe) : out.u_nom;
  out.mode = classify_mode(in, out.v_des, out.u_nom, u_filtered);
  out.u = std::clamp(u_filtered, cfg.u_min, cfg.u_max);
  r.state = {out.v_ramp, true};
  return r;
}

SpeedController::SpeedController(ControllerConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
}

ControllerOutput SpeedController::step(const ControlInputs& in) {
  StepResult r = step_controller(in, state_, cfg_);
  state_ = r.state;
  return r.output;
}

void SpeedController::reset(double v) { state_ = {v, false}; }

}  // namespace middleway

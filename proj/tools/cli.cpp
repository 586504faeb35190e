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

#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "csv.hpp"
#include "middleway/config.hpp"
#include "middleway/errors.hpp"
#include "middleway/rds.hpp"
#include "middleway/replay.hpp"
#include "middleway/run_log.hpp"
#include "middleway/simulation.hpp"

namespace middleway {

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::vector<std::string> overrides;

  ScenarioConfig load() const {
    std::vector<std::string> all = overrides;
    if (seed) all.push_back("simulation.seed=" + std::to_string(*seed));
    return load_scenario(config, all);
  }
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "Scenario JSON (default: canonical scenario)");
  sub->add_option("--seed", c.seed, "Random seed");
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  sub->add_option("--override", c.overrides, "key=value, repeatable")->take_all();
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const std::string path = (std::filesystem::path(dir) / name).string();
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path);
  return f;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  if (csv::trim(text).empty()) return out;
  for (const std::string_view item : csv::split(text)) out.push_back(csv::to_double(item, what));
  return out;
}

void print_report(std::ostream& out, const RunReport& r) {
  out << "seed " << r.seed << ", simulated " << std::lround(r.simulated_time * 100) / 100.0 << " s, collision "
      << (r.collision ? "yes (" + r.collision_detail + ")" : std::string("no")) << '\n';
  for (const auto& [id, m] : r.per_vehicle) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "vehicle %d: engaged %.1f s", id, m.engaged_time);
    out << buf;
    for (const Mode mode : kAllModes) {
      std::snprintf(buf, sizeof(buf), " %s=%.3f", std::string(to_string(mode)).c_str(), m.fraction(mode));
      out << buf;
    }
    if (m.min_h) {
      std::snprintf(buf, sizeof(buf), " min_h=%.2f", *m.min_h);
      out << buf;
    }
    out << '\n';
  }
}

int cmd_run(const Common& c, std::ostream& out) {
  const ScenarioConfig cfg = c.load();
  const RunResult r = run(cfg);
  {
    auto f = open_out(c.out, "run_log.csv");
    write_run_log_csv(f, r.log);
  }
  {
    auto f = open_out(c.out, "events.jsonl");
    write_events_jsonl(f, r.log.events);
  }
  {
    auto f = open_out(c.out, "report.json");
    f << report_to_json(r.report, cfg);
  }
  if (cfg.log.rds_sample_interval > 0.0) {
    GridSpec spec;
    spec.sensors = sensor_positions(cfg.infrastructure.mm_lo, cfg.infrastructure.mm_hi,
                                    cfg.infrastructure.gantry_spacing_mi);
    spec.columns = static_cast<Eigen::Index>(std::ceil(r.report.simulated_time / spec.cell_duration));
    auto g = open_out(c.out, "rds_grid.csv");
    write_grid_csv(g, build_grid(r.rds_samples, spec));
    for (const auto& [id, stats] : r.report.per_vehicle) {
      std::vector<TrajectoryPoint> traj;
      for (const LogRow& row : rows_for(r.log, id)) traj.push_back({row.t, row.mile_marker, row.velocity_mps});
      auto t = open_out(c.out, "trajectory_" + std::to_string(id) + ".csv");
      write_trajectory_csv(t, traj);
    }
  }
  print_report(out, r.report);
  return r.report.collision ? kExitCollision : kExitOk;
}

void add_string_options(CLI::App* sub, StringConfig& s) {
  sub->add_option("--traffic-speed", s.traffic_speed, "Leading traffic speed, m/s")->capture_default_str();
  sub->add_option("--v-gr", s.v_gr, "Posted speed seen by every controlled vehicle, m/s")->capture_default_str();
  sub->add_option("--spacing", s.spacing, "Initial gap between controlled vehicles, m")->capture_default_str();
  sub->add_option("--horizon", s.horizon, "Simulated time, s")->capture_default_str();
  sub->add_option("--settle", s.settle_window, "Trailing window for steady state, s")->capture_default_str();
}

void write_steady(std::ostream& f, const StringResult& r, const std::string& prefix) {
  for (std::size_t k = 0; k < r.vehicle_ids.size(); ++k) {
    f << prefix << k << ',' << r.vehicle_ids[k] << ',' << csv::format(r.steady_v_des[k]) << '\n';
  }
}

int cmd_string(const Common& c, const StringConfig& s, std::ostream& out) {
  if (s.n_controlled < 1) throw ConfigError("n", "must be >= 1");
  const ScenarioConfig cfg = c.load();
  const StringResult r = string_experiment(cfg, s);
  {
    auto f = open_out(c.out, "string_traces.csv");
    f << "t,index,vehicle_id,v_des,velocity,mode\n";
    for (std::size_t k = 0; k < r.vehicle_ids.size(); ++k) {
      for (std::size_t i = 0; i < r.v_des[k].size() && i < r.t.size(); ++i) {
        f << csv::format(r.t[i]) << ',' << k << ',' << r.vehicle_ids[k] << ',' << csv::format(r.v_des[k][i])
          << ',' << csv::format(r.velocity[k][i]) << ',' << to_string(r.mode[k][i]) << '\n';
      }
    }
  }
  {
    auto f = open_out(c.out, "string_steady.csv");
    f << "index,vehicle_id,steady_v_des\n";
    write_steady(f, r, "");
  }
  out << "index,vehicle_id,steady_v_des\n";
  write_steady(out, r, "");
  return r.collision ? kExitCollision : kExitOk;
}

struct SweepOptions {
  std::string param;
  std::string values;
  std::string replay;
  std::optional<int> vehicle;
  StringConfig string;
};

int cmd_sweep(const Common& c, const SweepOptions& o, std::ostream& out) {
  const std::vector<double> values = parse_list(o.values, "--values");
  if (values.empty()) throw ConfigError("values", "empty value list");
  const ScenarioConfig base = c.load();
  bool collision = false;

  if (o.param == "n_controlled") {
    auto f = open_out(c.out, "sweep_string.csv");
    f << "n_controlled,index,vehicle_id,steady_v_des\n";
    for (const double v : values) {
      if (v < 1 || std::floor(v) != v) throw ConfigError("values", "n_controlled must be a positive integer");
      StringConfig s = o.string;
      s.n_controlled = static_cast<int>(v);
      const StringResult r = string_experiment(base, s);
      collision = collision || r.collision;
      write_steady(f, r, std::to_string(s.n_controlled) + ",");
    }
    out << "wrote " << (std::filesystem::path(c.out) / "sweep_string.csv").string() << '\n';
    return collision ? kExitCollision : kExitOk;
  }

  if (!o.replay.empty()) {
    if (o.param != "controller.v_offset") {
      throw ConfigError("param", "open-loop replay only sweeps controller.v_offset");
    }
    const RunLog log = read_run_log_csv(o.replay);
    std::vector<LogRow> rows;
    for (const LogRow& r : log.rows) {
      if (!o.vehicle || r.vehicle_id == *o.vehicle) rows.push_back(r);
    }
    const auto setpoint = [&](int id) {
      if (base.controller.v_des_max) return *base.controller.v_des_max;
      for (const VehicleSpec& v : base.vehicles) {
        if (v.id == id) return v.driver_setpoint;
      }
      return VehicleSpec{}.driver_setpoint;
    };
    std::vector<std::vector<ReplayPoint>> traces;
    for (const double v : values) {
      std::vector<ReplayPoint> trace;
      for (const LogRow& r : rows) {
        const auto p = replay_middleway(std::span<const LogRow>(&r, 1), v, setpoint(r.vehicle_id));
        trace.insert(trace.end(), p.begin(), p.end());
      }
      traces.push_back(std::move(trace));
    }
    auto f = open_out(c.out, "sweep_replay.csv");
    f << "t,vehicle_id,v_pr,v_gr";
    for (const double v : values) f << ",v_des_" << csv::format(v);
    f << '\n';
    for (std::size_t i = 0; i < traces.front().size(); ++i) {
      const ReplayPoint& p = traces.front()[i];
      f << csv::format(p.t) << ',' << p.vehicle_id << ',' << csv::format(p.v_pr) << ',' << csv::format(p.v_gr);
      for (const auto& trace : traces) f << ',' << csv::format(trace[i].v_des);
      f << '\n';
    }
    out << "replayed " << traces.front().size() << " rows at " << values.size() << " offsets\n";
    return kExitOk;
  }

  auto f = open_out(c.out, "sweep.csv");
  f << "value,vehicle_id,collision,engaged_time";
  for (const Mode m : kAllModes) f << ',' << to_string(m);
  f << ",min_h,min_gap\n";
  for (const double v : values) {
    std::vector<std::string> overrides = c.overrides;
    if (c.seed) overrides.push_back("simulation.seed=" + std::to_string(*c.seed));
    overrides.push_back(o.param + "=" + csv::format(v));
    const ScenarioConfig cfg = load_scenario(c.config, overrides);
    const RunResult r = run(cfg);
    collision = collision || r.report.collision;
    for (const auto& [id, m] : r.report.per_vehicle) {
      f << csv::format(v) << ',' << id << ',' << (r.report.collision ? 1 : 0) << ','
        << csv::format(m.engaged_time);
      for (const Mode mode : kAllModes) f << ',' << csv::format(m.fraction(mode));
      f << ',' << (m.min_h ? csv::format(*m.min_h) : "") << ',' << (m.min_gap ? csv::format(*m.min_gap) : "")
        << '\n';
    }
  }
  out << "wrote " << (std::filesystem::path(c.out) / "sweep.csv").string() << '\n';
  return collision ? kExitCollision : kExitOk;
}

struct RdsOptions {
  std::string grid;
  std::string trajectory;
  std::string synthetic;
  std::string latencies = "0,60,120,300";
  double bin_mph = 1.0;
  double cell = 30.0;
  bool bilinear = false;
  std::string out = "out";
};

int cmd_rds(const RdsOptions& o, std::ostream& out) {
  const std::vector<double> latencies = parse_list(o.latencies, "--latencies");
  if (latencies.empty()) throw ConfigError("latencies", "empty latency list");
  RdsGrid grid;
  std::vector<TrajectoryPoint> trajectory;
  if (!o.synthetic.empty()) {
    if (!o.grid.empty() || !o.trajectory.empty()) {
      throw ConfigError("synthetic", "cannot be combined with --grid or --trajectory");
    }
    SyntheticConfig s;
    s.constant = o.synthetic == "static";
    SyntheticCase sc = synthetic_case(s);
    grid = std::move(sc.grid);
    trajectory = std::move(sc.trajectory);
    auto g = open_out(o.out, "rds_grid.csv");
    write_grid_csv(g, grid);
    auto t = open_out(o.out, "trajectory.csv");
    write_trajectory_csv(t, trajectory);
  } else {
    if (o.grid.empty() || o.trajectory.empty()) {
      throw ConfigError("grid", "--grid and --trajectory are both required without --synthetic");
    }
    if (!(o.cell > 0.0)) throw ConfigError("cell", "must be > 0");
    grid = load_grid_csv(o.grid, o.cell);
    trajectory = load_trajectory_csv(o.trajectory);
    validate(grid);
  }
  const auto stats = error_stats(trajectory, grid, latencies, o.bin_mph,
                                 o.bilinear ? Averaging::Bilinear : Averaging::Unweighted);
  {
    auto f = open_out(o.out, "rds_report.csv");
    write_error_report_csv(f, stats);
  }
  {
    auto f = open_out(o.out, "rds_histogram.csv");
    write_histogram_csv(f, stats);
  }
  write_error_report_csv(out, stats);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cooperative variable-speed-limit controller simulator"};
  app.name("middleway");
  app.require_subcommand(1);

  Common run_opts;
  auto* run_cmd = app.add_subcommand("run", "Simulate one scenario");
  add_common(run_cmd, run_opts);

  Common sweep_common;
  SweepOptions sweep_opts;
  auto* sweep_cmd = app.add_subcommand("sweep", "Repeat a run over values of one parameter");
  add_common(sweep_cmd, sweep_common);
  sweep_cmd->add_option("--param", sweep_opts.param, "Dotted config key, or n_controlled")->required();
  sweep_cmd->add_option("--values", sweep_opts.values, "Comma-separated values")->required();
  sweep_cmd->add_option("--replay", sweep_opts.replay, "Recorded run_log.csv for open-loop replay");
  sweep_cmd->add_option("--vehicle", sweep_opts.vehicle, "Restrict replay to one vehicle id");
  add_string_options(sweep_cmd, sweep_opts.string);

  RdsOptions rds_opts;
  auto* rds_cmd = app.add_subcommand("rds", "Latency error statistics for infrastructure speed reports");
  rds_cmd->add_option("--grid", rds_opts.grid, "Grid CSV");
  rds_cmd->add_option("--trajectory", rds_opts.trajectory, "Trajectory CSV");
  rds_cmd->add_option("--synthetic", rds_opts.synthetic, "Built-in field instead of files")
      ->check(CLI::IsMember({"wave", "static"}));
  rds_cmd->add_option("--latencies", rds_opts.latencies, "Comma-separated latencies, s")->capture_default_str();
  rds_cmd->add_option("--bin", rds_opts.bin_mph, "Histogram bin width, mph")->capture_default_str();
  rds_cmd->add_option("--cell", rds_opts.cell, "Report interval of --grid, s")->capture_default_str();
  rds_cmd->add_flag("--bilinear", rds_opts.bilinear, "Distance-weight the four reference cells");
  rds_cmd->add_option("--out", rds_opts.out, "Output directory")->capture_default_str();

  Common string_common;
  StringConfig string_opts;
  auto* string_cmd = app.add_subcommand("string", "Platoon of controlled vehicles behind fast traffic");
  add_common(string_cmd, string_common);
  string_cmd->add_option("--n", string_opts.n_controlled, "Controlled vehicles")->capture_default_str();
  add_string_options(string_cmd, string_opts);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run_opts, out);
    if (*sweep_cmd) return cmd_sweep(sweep_common, sweep_opts, out);
    if (*rds_cmd) return cmd_rds(rds_opts, out);
    if (*string_cmd) return cmd_string(string_common, string_opts, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace middleway

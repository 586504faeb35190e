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

#include "middleway/rds.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <set>

#include "csv.hpp"
#include "middleway/errors.hpp"
#include "middleway/units.hpp"

namespace middleway {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Index i with sensors[i] <= x < sensors[i + 1].
Eigen::Index spatial_bracket(const RdsGrid& grid, double x) {
  const auto& s = grid.sensors;
  const auto it = std::upper_bound(s.begin(), s.end(), x);
  const auto i = static_cast<Eigen::Index>(it - s.begin()) - 1;
  if (i < 0 || i + 1 >= static_cast<Eigen::Index>(s.size()) || !std::isfinite(x)) {
    throw AllNeighborsMissing("mile marker " + csv::format(x) + " outside sensor coverage");
  }
  return i;
}

Eigen::Index report_column(const RdsGrid& grid, double t) {
  const double k = std::floor((t - grid.origin) / grid.cell_duration);
  if (!std::isfinite(k) || k < 0.0 || k >= static_cast<double>(grid.columns())) return -1;
  return static_cast<Eigen::Index>(k);
}

double weighted_mean(const double* values, const double* weights, int n) {
  double sum = 0.0;
  double wsum = 0.0;
  for (int k = 0; k < n; ++k) {
    if (std::isnan(values[k])) continue;
    sum += weights[k] * values[k];
    wsum += weights[k];
  }
  if (!(wsum > 0.0)) throw AllNeighborsMissing("all neighbouring cells missing");
  return sum / wsum;
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return in;
}

void expect_header(std::istream& in, std::string_view header) {
  std::string line;
  if (!std::getline(in, line) || csv::trim(line) != header) {
    throw InputError("expected header '" + std::string(header) + "'");
  }
}

}  // namespace

bool RdsGrid::missing(Eigen::Index i, Eigen::Index j) const { return std::isnan(speed(i, j)); }

void validate(const RdsGrid& grid) {
  if (!(grid.cell_duration > 0.0)) throw ConfigError("rds.cell_duration", "must be > 0");
  if (!std::is_sorted(grid.sensors.begin(), grid.sensors.end()) ||
      std::adjacent_find(grid.sensors.begin(), grid.sensors.end()) != grid.sensors.end()) {
    throw ConfigError("rds.sensors", "must be strictly increasing");
  }
  if (grid.speed.rows() != static_cast<Eigen::Index>(grid.sensors.size())) {
    throw ConfigError("rds.sensors", "row count does not match sensor count");
  }
  if ((grid.speed.array() < 0.0).any()) throw ConfigError("rds.speed", "must be >= 0");
}

std::vector<double> sensor_positions(double lo, double hi, double spacing) {
  if (!(spacing > 0.0)) throw ConfigError("rds.sensor_spacing", "must be > 0");
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((hi - lo) / spacing + 1e-9));
  for (long k = 0; k <= n; ++k) out.push_back(lo + static_cast<double>(k) * spacing);
  return out;
}

RdsGrid build_grid(std::span<const TrajectoryPoint> samples, const GridSpec& spec) {
  RdsGrid grid;
  grid.origin = spec.origin;
  grid.cell_duration = spec.cell_duration;
  grid.sensors = spec.sensors;
  const auto rows = static_cast<Eigen::Index>(spec.sensors.size());
  grid.speed = Eigen::MatrixXd::Zero(rows, spec.columns);
  validate(grid);
  Eigen::MatrixXd count = Eigen::MatrixXd::Zero(rows, spec.columns);
  if (rows > 0) {
    const auto& s = spec.sensors;
    const double lo_edge = rows > 1 ? s[0] - (s[1] - s[0]) / 2 : -std::numeric_limits<double>::infinity();
    const double hi_edge =
        rows > 1 ? s[rows - 1] + (s[rows - 1] - s[rows - 2]) / 2 : std::numeric_limits<double>::infinity();
    for (const TrajectoryPoint& p : samples) {
      if (p.mile_marker < lo_edge || p.mile_marker >= hi_edge) continue;
      const Eigen::Index j = report_column(grid, p.t);
      if (j < 0) continue;
      auto i = static_cast<Eigen::Index>(std::upper_bound(s.begin(), s.end(), p.mile_marker) - s.begin()) - 1;
      i = std::max<Eigen::Index>(i, 0);
      if (i + 1 < rows && p.mile_marker >= (s[i] + s[i + 1]) / 2) ++i;
      grid.speed(i, j) += p.v;
      count(i, j) += 1.0;
    }
  }
  grid.speed = (count.array() > 0.0).select(grid.speed.array() / count.array(), kNaN);
  return grid;
}

double ideal_speed(const TrajectoryPoint& p, const RdsGrid& grid, Averaging averaging) {
  const Eigen::Index i = spatial_bracket(grid, p.mile_marker);
  const Eigen::Index j = report_column(grid, p.t);
  if (j < 0 || j + 1 >= grid.columns()) {
    throw AllNeighborsMissing("time " + csv::format(p.t) + " outside report coverage");
  }
  const double cells[4] = {grid.speed(i, j), grid.speed(i + 1, j), grid.speed(i, j + 1),
                           grid.speed(i + 1, j + 1)};
  double wx = 0.5;
  double wt = 0.5;
  if (averaging == Averaging::Bilinear) {
    wx = (p.mile_marker - grid.sensors[i]) / (grid.sensors[i + 1] - grid.sensors[i]);
    wt = (p.t - grid.report_start(j)) / grid.cell_duration;
  }
  const double weights[4] = {(1 - wx) * (1 - wt), wx * (1 - wt), (1 - wx) * wt, wx * wt};
  if (averaging == Averaging::Unweighted) {
    const double ones[4] = {1, 1, 1, 1};
    return weighted_mean(cells, ones, 4);
  }
  return weighted_mean(cells, weights, 4);
}

double realtime_speed(const TrajectoryPoint& p, const RdsGrid& grid, double latency) {
  const Eigen::Index i = spatial_bracket(grid, p.mile_marker);
  const Eigen::Index j = report_column(grid, p.t - latency);
  if (j < 0) {
    throw AllNeighborsMissing("no report available at time " + csv::format(p.t - latency));
  }
  const double cells[2] = {grid.speed(i, j), grid.speed(i + 1, j)};
  const double ones[2] = {1, 1};
  return weighted_mean(cells, ones, 2);
}

std::vector<ErrorStats> error_stats(std::span<const TrajectoryPoint> trajectory,
                                    const RdsGrid& grid, std::span<const double> latencies,
                                    double bin_mph, Averaging averaging) {
  if (!(bin_mph > 0.0)) throw ConfigError("rds.bin_mph", "must be > 0");
  std::vector<ErrorStats> out;
  for (const double latency : latencies) {
    std::vector<double> errors;
    for (const TrajectoryPoint& p : trajectory) {
      try {
        const double ideal = ideal_speed(p, grid, averaging);
        const double now = realtime_speed(p, grid, latency);
        errors.push_back(mps_to_mph(now - ideal));
      } catch (const AllNeighborsMissing&) {
      }
    }
    ErrorStats s;
    s.latency = latency;
    s.bin_mph = bin_mph;
    s.count = errors.size();
    if (errors.empty()) {
      s.mean_mph = kNaN;
      s.std_mph = kNaN;
      out.push_back(s);
      continue;
    }
    const Eigen::Map<const Eigen::ArrayXd> e(errors.data(), static_cast<Eigen::Index>(errors.size()));
    s.mean_mph = e.mean();
    s.std_mph = std::sqrt((e - s.mean_mph).square().mean());
    std::map<long, std::size_t> bins;
    for (const double x : errors) ++bins[static_cast<long>(std::floor(x / bin_mph))];
    for (long k = bins.begin()->first; k <= bins.rbegin()->first; ++k) {
      const auto it = bins.find(k);
      s.histogram.push_back({static_cast<double>(k) * bin_mph, it == bins.end() ? 0 : it->second});
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_grid_csv(std::ostream& out, const RdsGrid& grid) {
  out << kGridHeader << '\n';
  for (Eigen::Index i = 0; i < grid.speed.rows(); ++i) {
    for (Eigen::Index j = 0; j < grid.columns(); ++j) {
      out << csv::format(grid.sensors[i]) << ',' << csv::format(grid.report_start(j)) << ',';
      if (!grid.missing(i, j)) out << csv::format(grid.speed(i, j));
      out << '\n';
    }
  }
}

RdsGrid read_grid_csv(std::istream& in, double cell_duration) {
  expect_header(in, kGridHeader);
  struct Cell {
    double sensor, start, speed;
  };
  std::vector<Cell> cells;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 3) throw InputError("grid line " + std::to_string(lineno) + ": expected 3 fields");
    const double speed = f[2].empty() || f[2] == "nan" ? kNaN : csv::to_double(f[2], "mean_speed_mps");
    if (speed < 0.0) throw InputError("grid line " + std::to_string(lineno) + ": negative speed");
    cells.push_back({csv::to_double(f[0], "sensor_mm"), csv::to_double(f[1], "report_start_s"), speed});
  }
  RdsGrid grid;
  grid.cell_duration = cell_duration;
  if (cells.empty()) return grid;
  std::set<double> sensors, starts;
  for (const Cell& c : cells) {
    sensors.insert(c.sensor);
    starts.insert(c.start);
  }
  grid.sensors.assign(sensors.begin(), sensors.end());
  grid.origin = *starts.begin();
  if (!(grid.cell_duration > 0.0)) throw InputError("grid: cell duration must be > 0");
  Eigen::Index cols = 0;
  std::vector<Eigen::Index> column(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const double q = (cells[k].start - grid.origin) / grid.cell_duration;
    const double r = std::round(q);
    if (std::abs(q - r) > 1e-6) {
      throw InputError("grid: report start " + csv::format(cells[k].start) + " is off the report lattice");
    }
    column[k] = static_cast<Eigen::Index>(r);
    cols = std::max(cols, column[k] + 1);
  }
  grid.speed = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(grid.sensors.size()), cols, kNaN);
  Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(grid.speed.rows(), cols);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(
        std::lower_bound(grid.sensors.begin(), grid.sensors.end(), cells[k].sensor) - grid.sensors.begin());
    if (seen(i, column[k])++) {
      throw InputError("grid: duplicate cell at sensor " + csv::format(cells[k].sensor) + ", start " +
                       csv::format(cells[k].start));
    }
    grid.speed(i, column[k]) = cells[k].speed;
  }
  return grid;
}

RdsGrid load_grid_csv(const std::string& path, double cell_duration) {
  auto in = open(path);
  try {
    return read_grid_csv(in, cell_duration);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryPoint> points) {
  out << kTrajectoryHeader << '\n';
  for (const TrajectoryPoint& p : points) {
    out << csv::format(p.t) << ',' << csv::format(p.mile_marker) << ',' << csv::format(p.v) << '\n';
  }
}

std::vector<TrajectoryPoint> read_trajectory_csv(std::istream& in) {
  expect_header(in, kTrajectoryHeader);
  std::vector<TrajectoryPoint> out;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 3) throw InputError("trajectory line " + std::to_string(lineno) + ": expected 3 fields");
    TrajectoryPoint p{csv::to_double(f[0], "t_s"), csv::to_double(f[1], "mile_marker"),
                      csv::to_double(f[2], "speed_mps")};
    if (!out.empty() && !(p.t > out.back().t)) {
      throw InputError("trajectory line " + std::to_string(lineno) + ": time must strictly increase");
    }
    out.push_back(p);
  }
  return out;
}

std::vector<TrajectoryPoint> load_trajectory_csv(const std::string& path) {
  auto in = open(path);
  try {
    return read_trajectory_csv(in);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_error_report_csv(std::ostream& out, std::span<const ErrorStats> stats) {
  out << kErrorReportHeader << '\n';
  for (const ErrorStats& s : stats) {
    out << csv::format(s.latency) << ',' << csv::format(s.mean_mph) << ',' << csv::format(s.std_mph) << '\n';
  }
}

void write_histogram_csv(std::ostream& out, std::span<const ErrorStats> stats) {
  out << kHistogramHeader << '\n';
  for (const ErrorStats& s : stats) {
    for (const HistogramBin& b : s.histogram) {
      out << csv::format(s.latency) << ',' << csv::format(b.lo_mph) << ',' << csv::format(b.lo_mph + s.bin_mph)
          << ',' << b.count << '\n';
    }
  }
}

double WaveField::speed(double mile, double t) const {
  const double phase = t - onset - (source_mile - mile) / propagation_mph * 3600.0;
  if (phase < 0.0) return mph_to_mps(free_mph);
  const double mid = (free_mph + low_mph) / 2;
  const double amp = (free_mph - low_mph) / 2;
  return mph_to_mps(mid + amp * std::cos(2 * std::numbers::pi * phase / period));
}

SyntheticCase synthetic_case(const SyntheticConfig& cfg) {
  if (!(cfg.sample_dt > 0.0)) throw ConfigError("rds.sample_dt", "must be > 0");
  if (!(cfg.cell_duration > 0.0)) throw ConfigError("rds.cell_duration", "must be > 0");
  const auto field = [&](double mile, double t) {
    return cfg.constant ? mph_to_mps(cfg.constant_mph) : cfg.wave.speed(mile, t);
  };
  SyntheticCase out;
  RdsGrid& g = out.grid;
  g.origin = 0.0;
  g.cell_duration = cfg.cell_duration;
  g.sensors = sensor_positions(0.0, cfg.length_mi, cfg.sensor_spacing_mi);
  const auto cols = static_cast<Eigen::Index>(std::floor(cfg.duration / cfg.cell_duration)) + 1;
  g.speed.resize(static_cast<Eigen::Index>(g.sensors.size()), cols);
  const auto per_cell = static_cast<int>(std::round(cfg.cell_duration / cfg.sample_dt));
  for (Eigen::Index i = 0; i < g.speed.rows(); ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      double sum = 0.0;
      for (int k = 0; k < per_cell; ++k) sum += field(g.sensors[i], g.report_start(j) + k * cfg.sample_dt);
      g.speed(i, j) = sum / per_cell;
    }
  }
  // The probe stops a little short of the last sensor and of the last
  // complete report pair.
  double x = 0.0;
  double t = cfg.entry_time;
  const double t_stop = cfg.duration - cfg.cell_duration - cfg.sample_dt;
  while (x < cfg.length_mi - 0.01 && t < t_stop) {
    const double v = field(x, t);
    out.trajectory.push_back({t, x, v});
    x += meters_to_miles(v * cfg.sample_dt);
    t += cfg.sample_dt;
  }
  return out;
}

}  // namespace middleway

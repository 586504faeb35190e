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

#ifndef MIDDLEWAY_RDS_HPP
#define MIDDLEWAY_RDS_HPP

#include <Eigen/Core>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace middleway {

struct TrajectoryPoint {
  double t = 0.0;            // s
  double mile_marker = 0.0;  // mi
  double v = 0.0;            // m/s
};

/// Fixed-sensor speed reports. Row i is sensor i, column j the report
/// covering [origin + j*cell_duration, origin + (j+1)*cell_duration).
/// Missing cells hold NaN.
struct RdsGrid {
  double origin = 0.0;
  double cell_duration = 30.0;
  std::vector<double> sensors;  // mile markers, ascending
  Eigen::MatrixXd speed;

  Eigen::Index columns() const { return speed.cols(); }
  double report_start(Eigen::Index j) const { return origin + static_cast<double>(j) * cell_duration; }
  bool missing(Eigen::Index i, Eigen::Index j) const;
};

/// Throws ConfigError when the grid breaks its invariants.
void validate(const RdsGrid& grid);

/// No usable cell for the requested point.
class AllNeighborsMissing : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  double origin = 0.0;
  double cell_duration = 30.0;
  std::vector<double> sensors;
  Eigen::Index columns = 0;
};

/// Evenly spaced sensors over [lo, hi].
std::vector<double> sensor_positions(double lo, double hi, double spacing = 0.5);

/// Each sample lands in the nearest sensor's zone (midpoints go to the
/// upper sensor) and the report interval containing its time.
RdsGrid build_grid(std::span<const TrajectoryPoint> samples, const GridSpec& spec);

enum class Averaging { Unweighted, Bilinear };

/// Mean of the 2x2 bracketing cells around the point.
double ideal_speed(const TrajectoryPoint& p, const RdsGrid& grid,
                   Averaging averaging = Averaging::Unweighted);

/// Mean of the two bracketing sensors' latest reports starting at or before
/// t - latency.
double realtime_speed(const TrajectoryPoint& p, const RdsGrid& grid, double latency);

struct HistogramBin {
  double lo_mph = 0.0;
  std::size_t count = 0;
};

struct ErrorStats {
  double latency = 0.0;
  std::size_t count = 0;
  double mean_mph = 0.0;
  double std_mph = 0.0;  // population
  double bin_mph = 1.0;
  std::vector<HistogramBin> histogram;
};

/// Errors are realtime minus ideal, in mph, over points where both exist.
std::vector<ErrorStats> error_stats(std::span<const TrajectoryPoint> trajectory,
                                    const RdsGrid& grid, std::span<const double> latencies,
                                    double bin_mph = 1.0,
                                    Averaging averaging = Averaging::Unweighted);

// CSV formats.
inline constexpr const char* kGridHeader = "sensor_mm,report_start_s,mean_speed_mps";
inline constexpr const char* kTrajectoryHeader = "t_s,mile_marker,speed_mps";
inline constexpr const char* kErrorReportHeader = "latency_s,mean_err,std_err";
inline constexpr const char* kHistogramHeader = "latency_s,bin_lo_mph,bin_hi_mph,count";

void write_grid_csv(std::ostream& out, const RdsGrid& grid);
/// Report starts must sit on a lattice of `cell_duration` from the earliest one.
RdsGrid read_grid_csv(std::istream& in, double cell_duration = 30.0);
RdsGrid load_grid_csv(const std::string& path, double cell_duration = 30.0);

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryPoint> points);
std::vector<TrajectoryPoint> read_trajectory_csv(std::istream& in);
std::vector<TrajectoryPoint> load_trajectory_csv(const std::string& path);

void write_error_report_csv(std::ostream& out, std::span<const ErrorStats> stats);
void write_histogram_csv(std::ostream& out, std::span<const ErrorStats> stats);

/// Stop-and-go wave train in mile coordinates increasing downstream. Waves
/// are born at `source_mile` from `onset` on and travel upstream.
struct WaveField {
  double free_mph = 75.0;
  double low_mph = 15.0;
  double period = 240.0;         // s
  double propagation_mph = 12.0;
  double source_mile = 6.0;
  double onset = 0.0;

  double speed(double mile, double t) const;  // m/s
};

struct SyntheticConfig {
  WaveField wave;
  bool constant = false;
  double constant_mph = 45.0;
  double length_mi = 8.0;
  double sensor_spacing_mi = 0.5;
  double cell_duration = 30.0;
  double duration = 3600.0;
  double entry_time = 300.0;
  double sample_dt = 1.0;
};

struct SyntheticCase {
  RdsGrid grid;
  std::vector<TrajectoryPoint> trajectory;
};

/// Sensors report the time-mean of the field at their location; one probe
/// drives through the field from mile 0.
SyntheticCase synthetic_case(const SyntheticConfig& cfg);

}  // namespace middleway

#endif  // MIDDLEWAY_RDS_HPP

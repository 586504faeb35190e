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

#ifndef MIDDLEWAY_RUN_LOG_HPP
#define MIDDLEWAY_RUN_LOG_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "middleway/controller.hpp"
#include "middleway/vehicle.hpp"

namespace middleway {

/// One CSV row. Controller columns are empty for non-controlled vehicles.
struct LogRow {
  double t = 0.0;
  int vehicle_id = 0;
  VehicleKind kind = VehicleKind::Human;
  double position_m = 0.0;
  double mile_marker = 0.0;
  double velocity_mps = 0.0;
  std::optional<Mode> mode;
  std::optional<double> v_des;
  std::optional<double> v_gr;
  std::optional<double> v_pr;
  double u = 0.0;

  bool operator==(const LogRow&) const = default;
};

struct Event {
  double t = 0.0;
  std::string type;
  int vehicle_id = -1;
  std::string detail;

  bool operator==(const Event&) const = default;
};

struct RunLog {
  std::vector<LogRow> rows;
  std::vector<Event> events;

  bool operator==(const RunLog&) const = default;
};

inline constexpr const char* kRunLogHeader =
    "t,vehicle_id,kind,position_m,mile_marker,velocity_mps,mode,v_des,v_gr,v_pr,u";

/// Doubles are written in shortest round-trip form, so read(write(x)) == x.
void write_run_log_csv(std::ostream& out, const RunLog& log);
RunLog read_run_log_csv(std::istream& in);
RunLog read_run_log_csv(const std::string& path);

/// One JSON object per line.
void write_events_jsonl(std::ostream& out, const std::vector<Event>& events);
std::vector<Event> read_events_jsonl(std::istream& in);

/// Rows for a single vehicle, in time order.
std::vector<LogRow> rows_for(const RunLog& log, int vehicle_id);

}  // namespace middleway

#endif  // MIDDLEWAY_RUN_LOG_HPP

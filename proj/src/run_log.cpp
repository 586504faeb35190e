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

#include "middleway/run_log.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "csv.hpp"
#include "middleway/errors.hpp"

namespace middleway {

namespace {

void put_opt(std::ostream& out, const std::optional<double>& v) {
  if (v) out << csv::format(*v);
}

std::optional<double> get_opt(std::string_view s, std::string_view what) {
  if (s.empty()) return std::nullopt;
  return csv::to_double(s, what);
}

}  // namespace

void write_run_log_csv(std::ostream& out, const RunLog& log) {
  out << kRunLogHeader << '\n';
  for (const LogRow& r : log.rows) {
    out << csv::format(r.t) << ',' << r.vehicle_id << ',' << to_string(r.kind) << ','
        << csv::format(r.position_m) << ',' << csv::format(r.mile_marker) << ','
        << csv::format(r.velocity_mps) << ',';
    if (r.mode) out << to_string(*r.mode);
    out << ',';
    put_opt(out, r.v_des);
    out << ',';
    put_opt(out, r.v_gr);
    out << ',';
    put_opt(out, r.v_pr);
    out << ',' << csv::format(r.u) << '\n';
  }
}

RunLog read_run_log_csv(std::istream& in) {
  RunLog log;
  std::string line;
  if (!std::getline(in, line) || csv::trim(line) != kRunLogHeader) {
    throw InputError("run log: missing or unexpected header");
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 11) {
      throw InputError("run log line " + std::to_string(lineno) + ": expected 11 fields");
    }
    LogRow r;
    r.t = csv::to_double(f[0], "t");
    r.vehicle_id = csv::to_int(f[1], "vehicle_id");
    const auto kind = parse_vehicle_kind(f[2]);
    if (!kind) throw InputError("run log line " + std::to_string(lineno) + ": bad kind");
    r.kind = *kind;
    r.position_m = csv::to_double(f[3], "position_m");
    r.mile_marker = csv::to_double(f[4], "mile_marker");
    r.velocity_mps = csv::to_double(f[5], "velocity_mps");
    if (!f[6].empty()) {
      r.mode = parse_mode(f[6]);
      if (!r.mode) throw InputError("run log line " + std::to_string(lineno) + ": bad mode");
    }
    r.v_des = get_opt(f[7], "v_des");
    r.v_gr = get_opt(f[8], "v_gr");
    r.v_pr = get_opt(f[9], "v_pr");
    r.u = csv::to_double(f[10], "u");
    log.rows.push_back(r);
  }
  return log;
}

RunLog read_run_log_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open run log '" + path + "'");
  return read_run_log_csv(in);
}

void write_events_jsonl(std::ostream& out, const std::vector<Event>& events) {
  for (const Event& e : events) {
    nlohmann::ordered_json j;
    j["t"] = e.t;
    j["type"] = e.type;
    j["vehicle_id"] = e.vehicle_id;
    j["detail"] = e.detail;
    out << j.dump() << '\n';
  }
}

std::vector<Event> read_events_jsonl(std::istream& in) {
  std::vector<Event> events;
  std::string line;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line);
    events.push_back({j.at("t").get<double>(), j.at("type").get<std::string>(),
                      j.at("vehicle_id").get<int>(), j.at("detail").get<std::string>()});
  }
  return events;
}

std::vector<LogRow> rows_for(const RunLog& log, int vehicle_id) {
  std::vector<LogRow> out;
  for (const LogRow& r : log.rows) {
    if (r.vehicle_id == vehicle_id) out.push_back(r);
  }
  return out;
}

}  // namespace middleway

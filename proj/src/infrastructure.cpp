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

#include "middleway/infrastructure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "csv.hpp"
#include "middleway/errors.hpp"
#include "middleway/units.hpp"

namespace middleway {

namespace {
constexpr double kEps = 1e-9;
}

std::string_view to_string(Direction d) {
  return d == Direction::Eastbound ? "eastbound" : "westbound";
}

std::optional<Direction> parse_direction(std::string_view text) {
  if (text == "E" || text == "e" || text == "eastbound") return Direction::Eastbound;
  if (text == "W" || text == "w" || text == "westbound") return Direction::Westbound;
  return std::nullopt;
}

const Gantry* CorridorMap::find(std::string_view id) const {
  for (const Gantry& g : gantries) {
    if (g.id == id) return &g;
  }
  return nullptr;
}

Gantry* CorridorMap::find(std::string_view id) {
  return const_cast<Gantry*>(std::as_const(*this).find(id));
}

namespace {

std::string gantry_id(Direction d, double mm) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << (d == Direction::Eastbound ? 'E' : 'W') << mm;
  return os.str();
}

void sort_gantries(CorridorMap& map) {
  std::stable_sort(map.gantries.begin(), map.gantries.end(),
                   [](const Gantry& a, const Gantry& b) { return a.mile_marker < b.mile_marker; });
}

}  // namespace

CorridorMap make_corridor(double mm_lo, double mm_hi, double spacing_mi, int posted_mph) {
  if (!(spacing_mi > 0.0)) throw ConfigError("infrastructure.gantry_spacing_mi", "must be > 0");
  if (!(mm_hi > mm_lo)) throw ConfigError("infrastructure.mm_hi", "must exceed mm_lo");
  CorridorMap map;
  map.mm_lo = mm_lo;
  map.mm_hi = mm_hi;
  const auto n = static_cast<int>(std::floor((mm_hi - mm_lo) / spacing_mi + kEps));
  for (int k = 0; k <= n; ++k) {
    const double mm = mm_lo + k * spacing_mi;
    for (Direction d : {Direction::Eastbound, Direction::Westbound}) {
      map.gantries.push_back({gantry_id(d, mm), mm, d, posted_mph, 0.0});
    }
  }
  return map;
}

CorridorMap parse_corridor_csv(std::istream& in, std::optional<double> mm_lo,
                               std::optional<double> mm_hi) {
  CorridorMap map;
  std::string line;
  bool header = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty() || line.front() == '#') continue;
    if (header) {
      header = false;
      if (csv::trim(line) != "id,mile_marker,direction") {
        throw InputError("corridor map: expected header id,mile_marker,direction");
      }
      continue;
    }
    const auto f = csv::split(line);
    if (f.size() != 3) {
      throw InputError("corridor map line " + std::to_string(lineno) + ": expected 3 fields");
    }
    const auto dir = parse_direction(f[2]);
    if (!dir) {
      throw InputError("corridor map line " + std::to_string(lineno) + ": bad direction '" +
                       std::string(f[2]) + "'");
    }
    map.gantries.push_back({std::string(f[0]), csv::to_double(f[1], "mile_marker"), *dir, 70, 0.0});
  }
  if (map.gantries.empty()) throw InputError("corridor map has no gantries");
  sort_gantries(map);
  map.mm_lo = mm_lo.value_or(map.gantries.front().mile_marker);
  map.mm_hi = mm_hi.value_or(map.gantries.back().mile_marker);
  return map;
}

CorridorMap load_corridor_csv(const std::string& path, std::optional<double> mm_lo,
                              std::optional<double> mm_hi) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corridor map '" + path + "'");
  return parse_corridor_csv(in, mm_lo, mm_hi);
}

void write_corridor_csv(std::ostream& out, const CorridorMap& map) {
  out << "id,mile_marker,direction\n";
  for (const Gantry& g : map.gantries) {
    out << g.id << ',' << csv::format(g.mile_marker) << ','
        << (g.direction == Direction::Eastbound ? 'E' : 'W') << '\n';
  }
}

std::optional<std::size_t> nearest_gantry(const CorridorMap& map, double mile_marker,
                                          Direction heading, double radius_mi) {
  std::optional<std::size_t> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < map.gantries.size(); ++i) {
    const Gantry& g = map.gantries[i];
    if (g.direction != heading) continue;
    const double d = std::abs(g.mile_marker - mile_marker);
    if (d <= radius_mi + kEps && d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

GantryTracker::Update GantryTracker::update(double mile_marker, Direction heading,
                                            const CorridorMap& map) {
  Update u;
  if (!map.contains(mile_marker)) {
    current_.reset();
    return u;
  }
  u.in_corridor = true;
  const auto hit = nearest_gantry(map, mile_marker, heading, radius_mi_);
  if (hit && hit != current_) {
    current_ = hit;
    u.acquired = true;
  }
  u.gantry = current_;
  return u;
}

VslReading active_gantry(double mile_marker, Direction heading, const CorridorMap& map,
                         std::optional<std::size_t> previous, double now) {
  VslReading r;
  r.fetched_at = now;
  if (!map.contains(mile_marker)) return r;
  auto idx = nearest_gantry(map, mile_marker, heading);
  if (!idx) idx = previous;
  if (!idx || *idx >= map.gantries.size()) return r;
  const Gantry& g = map.gantries[*idx];
  r.gantry_id = g.id;
  r.v_gr = mph_to_mps(g.posted_mph);
  r.valid = true;
  return r;
}

std::optional<Direction> HeadingEstimator::update(double now, double mile_marker) {
  history_.emplace_back(now, mile_marker);
  // Keep the newest sample that is at least a window old as the reference.
  while (history_.size() > 1 && now - history_[1].first >= window_s_ - kEps) history_.pop_front();
  const double delta = mile_marker - history_.front().second;
  if (std::abs(delta) > 1e-12) {
    heading_ = delta < 0.0 ? Direction::Westbound : Direction::Eastbound;
  }
  return heading_;
}

bool FetchScheduler::due(double now) {
  if (!next_ || now + kEps < *next_) return false;
  // Skip missed slots so a long gap does not produce a burst of fetches.
  while (*next_ <= now + kEps) *next_ += period_;
  return true;
}

std::vector<double> poll_schedule(std::span<const double> entries, double t_end,
                                  double period) {
  std::vector<double> out;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const bool last = k + 1 == entries.size();
    for (int m = 0;; ++m) {
      const double t = entries[k] + m * period;
      if (last ? t > t_end + kEps : t >= entries[k + 1] - kEps) break;
      out.push_back(t);
    }
  }
  return out;
}

int round_to_5(double mph) { return static_cast<int>(std::floor(mph / 5.0 + 0.5)) * 5; }

int vsl_algorithm(std::span<const double> downstream_speeds_mps,
                  std::optional<int> prev_posted, const VslAlgorithmConfig& cfg) {
  int target = cfg.max_mph;
  if (!downstream_speeds_mps.empty()) {
    const double slowest =
        mps_to_mph(*std::min_element(downstream_speeds_mps.begin(), downstream_speeds_mps.end()));
    if (slowest < cfg.activation_mph) {
      target = std::clamp(round_to_5(slowest + cfg.buffer_mph), cfg.min_mph, cfg.max_mph);
    }
  }
  if (prev_posted) {
    target = std::clamp(target, *prev_posted - cfg.max_change_mph,
                        *prev_posted + cfg.max_change_mph);
  }
  return target;
}

bool VslController::due(double now) const {
  return !next_update_ || now + kEps >= *next_update_;
}

std::vector<FeedMessage> VslController::update(double now, CorridorMap& map,
                                               std::span<const SegmentSpeed> segments) {
  if (!due(now)) return {};
  if (!next_update_) next_update_ = now;
  while (*next_update_ <= now + kEps) *next_update_ += cfg_.update_period;

  std::vector<FeedMessage> issued;
  issued.reserve(map.gantries.size());
  std::vector<double> speeds;
  for (Gantry& g : map.gantries) {
    speeds.clear();
    for (const SegmentSpeed& seg : segments) {
      if (seg.direction && *seg.direction != g.direction) continue;
      const double mid = 0.5 * (seg.mm_a + seg.mm_b);
      const double ahead =
          g.direction == Direction::Westbound ? g.mile_marker - mid : mid - g.mile_marker;
      if (ahead >= -kEps && ahead <= cfg_.lookahead_mi + kEps) speeds.push_back(seg.speed_mps);
    }
    const int posted = vsl_algorithm(speeds, g.posted_mph, cfg_);
    if (posted != g.posted_mph) {
      g.posted_mph = posted;
      g.last_update = now;
    }
    issued.push_back({g.id, g.posted_mph, now});
  }
  return issued;
}

FeedClient::FeedClient(FeedConfig cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {}

void FeedClient::publish(const FeedMessage& msg) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  if (uni(rng_) < cfg_.dropout) return;
  in_flight_.push_back(msg);
}

void FeedClient::advance(double now) {
  while (!in_flight_.empty() && in_flight_.front().issued_at + cfg_.latency <= now + kEps) {
    const FeedMessage& m = in_flight_.front();
    delivered_[m.gantry_id] = {m, m.issued_at + cfg_.latency};
    in_flight_.pop_front();
  }
}

std::optional<FeedClient::Delivered> FeedClient::latest(std::string_view gantry_id,
                                                        double now) const {
  const auto it = delivered_.find(gantry_id);
  if (it == delivered_.end()) return std::nullopt;
  if (now - it->second.delivered_at > cfg_.staleness + kEps) return std::nullopt;
  return it->second;
}

VslClient::VslClient(Config cfg)
    : cfg_(cfg),
      heading_(cfg.heading_window),
      tracker_(cfg.acquire_radius_mi),
      scheduler_(cfg.poll_period) {}

VslClient::Result VslClient::update(double now, double mile_marker, const CorridorMap& map,
                                    const FeedClient& feed) {
  Result res;
  const auto heading = heading_.update(now, mile_marker);
  if (!map.contains(mile_marker) || !heading) {
    tracker_.reset();
    scheduler_.stop();
    reading_ = VslReading{};
    reading_.fetched_at = now;
    res.reading = reading_;
    res.in_corridor = map.contains(mile_marker);
    return res;
  }
  res.in_corridor = true;
  const auto lock = tracker_.update(mile_marker, *heading, map);
  if (lock.acquired) {
    scheduler_.on_entry(now);
    res.acquired = true;
  }
  if (lock.gantry && scheduler_.due(now)) {
    const Gantry& g = map.gantries[*lock.gantry];
    reading_ = VslReading{};
    reading_.gantry_id = g.id;
    reading_.fetched_at = now;
    if (const auto msg = feed.latest(g.id, now)) {
      reading_.v_gr = mph_to_mps(msg->message.posted_mph);
      reading_.valid = true;
    }
  }
  res.reading = reading_;
  return res;
}

}  // namespace middleway

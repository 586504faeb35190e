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

#ifndef MIDDLEWAY_INFRASTRUCTURE_HPP
#define MIDDLEWAY_INFRASTRUCTURE_HPP

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace middleway {

enum class Direction { Eastbound, Westbound };

std::string_view to_string(Direction d);
std::optional<Direction> parse_direction(std::string_view text);

struct Gantry {
  std::string id;
  double mile_marker = 0.0;
  Direction direction = Direction::Westbound;
  int posted_mph = 70;
  double last_update = 0.0;
};

/// Gantries sorted by mile marker; the corridor is [mm_lo, mm_hi].
struct CorridorMap {
  std::vector<Gantry> gantries;
  double mm_lo = 53.0;
  double mm_hi = 70.0;

  bool contains(double mile_marker) const {
    return mile_marker >= mm_lo && mile_marker <= mm_hi;
  }
  const Gantry* find(std::string_view id) const;
  Gantry* find(std::string_view id);
};

/// Gantries every `spacing_mi` from mm_lo to mm_hi, one per direction,
/// all posting `posted_mph`.
CorridorMap make_corridor(double mm_lo, double mm_hi, double spacing_mi = 0.5,
                          int posted_mph = 70);

/// CSV with header `id,mile_marker,direction`; direction is E/W or
/// eastbound/westbound. Bounds default to the gantry extent.
CorridorMap parse_corridor_csv(std::istream& in, std::optional<double> mm_lo = {},
                               std::optional<double> mm_hi = {});
CorridorMap load_corridor_csv(const std::string& path, std::optional<double> mm_lo = {},
                              std::optional<double> mm_hi = {});
void write_corridor_csv(std::ostream& out, const CorridorMap& map);

struct VslReading {
  std::string gantry_id;
  double v_gr = 0.0;  // m/s
  bool valid = false;
  double fetched_at = 0.0;
};

inline constexpr double kAcquireRadiusMiles = 0.15;

/// Index of the nearest gantry serving `heading` within `radius_mi`.
std::optional<std::size_t> nearest_gantry(const CorridorMap& map, double mile_marker,
                                          Direction heading,
                                          double radius_mi = kAcquireRadiusMiles);

/// Sticky gantry acquisition: a gantry stays active until another one is
/// acquired or the corridor is left.
class GantryTracker {
 public:
  struct Update {
    bool in_corridor = false;
    std::optional<std::size_t> gantry;
    bool acquired = false;  // a new gantry was entered on this update
  };

  explicit GantryTracker(double radius_mi = kAcquireRadiusMiles) : radius_mi_(radius_mi) {}

  Update update(double mile_marker, Direction heading, const CorridorMap& map);
  void reset() { current_.reset(); }
  std::optional<std::size_t> current() const { return current_; }

 private:
  double radius_mi_;
  std::optional<std::size_t> current_;
};

/// Stateless geofence + acquisition against the map's posted speeds.
/// `previous` carries the sticky acquisition between calls.
VslReading active_gantry(double mile_marker, Direction heading, const CorridorMap& map,
                         std::optional<std::size_t> previous = {}, double now = 0.0);

/// Heading from the sign of the mile-marker change over a trailing window.
class HeadingEstimator {
 public:
  explicit HeadingEstimator(double window_s = 2.0) : window_s_(window_s) {}
  std::optional<Direction> update(double now, double mile_marker);
  std::optional<Direction> heading() const { return heading_; }

 private:
  double window_s_;
  std::deque<std::pair<double, double>> history_;
  std::optional<Direction> heading_;
};

/// Fetch on every gantry entry and every `period` seconds after it.
class FetchScheduler {
 public:
  explicit FetchScheduler(double period = 5.0) : period_(period) {}

  void on_entry(double now) { next_ = now; }
  void stop() { next_.reset(); }
  /// True when a fetch is due at `now`; advances the schedule.
  bool due(double now);

 private:
  double period_;
  std::optional<double> next_;
};

/// Fetch times produced by entries at `entries` (ascending) up to t_end.
std::vector<double> poll_schedule(std::span<const double> entries, double t_end,
                                  double period = 5.0);

struct VslAlgorithmConfig {
  double activation_mph = 45.0;
  double buffer_mph = 10.0;
  int min_mph = 30;
  int max_mph = 70;
  int max_change_mph = 10;
  double update_period = 30.0;  // s
  double lookahead_mi = 1.0;
};

/// Nearest multiple of 5, halves rounded up.
int round_to_5(double mph);

/// Surrogate posting rule for one gantry. Below the activation threshold the
/// sign shows round5(min speed + buffer) in [min, max]; otherwise max. The
/// step from `prev_posted` is limited to max_change_mph.
int vsl_algorithm(std::span<const double> downstream_speeds_mps,
                  std::optional<int> prev_posted, const VslAlgorithmConfig& cfg = {});

/// Mean speed over a stretch of roadway, for feeding the posting rule.
struct SegmentSpeed {
  double mm_a = 0.0;
  double mm_b = 0.0;
  double speed_mps = 0.0;
  std::optional<Direction> direction;  // unset: both carriageways
};

struct FeedMessage {
  std::string gantry_id;
  int posted_mph = 0;
  double issued_at = 0.0;
};

/// Infrastructure side: reposts every gantry each update period.
class VslController {
 public:
  explicit VslController(VslAlgorithmConfig cfg = {}) : cfg_(cfg) {}

  /// Recomputes postings when an update is due. Returns the issued messages
  /// (one per gantry) or nothing when no update happened.
  std::vector<FeedMessage> update(double now, CorridorMap& map,
                                  std::span<const SegmentSpeed> segments);
  bool due(double now) const;
  const VslAlgorithmConfig& config() const { return cfg_; }

 private:
  VslAlgorithmConfig cfg_;
  std::optional<double> next_update_;
};

struct FeedConfig {
  double latency = 0.0;     // s
  double dropout = 0.0;     // probability a message is lost
  double staleness = 60.0;  // s since last delivery before a reading expires
};

/// Delayed, lossy mirror of the gantry messages.
class FeedClient {
 public:
  struct Delivered {
    FeedMessage message;
    double delivered_at = 0.0;
  };

  FeedClient(FeedConfig cfg, std::uint64_t seed);

  void publish(const FeedMessage& msg);
  /// Delivers every in-flight message whose arrival time is <= now.
  void advance(double now);
  /// Latest delivered message for the gantry, unless stale at `now`.
  std::optional<Delivered> latest(std::string_view gantry_id, double now) const;

  void set_dropout(double p) { cfg_.dropout = p; }
  const FeedConfig& config() const { return cfg_; }

 private:
  FeedConfig cfg_;
  std::mt19937_64 rng_;
  std::deque<FeedMessage> in_flight_;
  std::map<std::string, Delivered, std::less<>> delivered_;
};

/// Vehicle-side VSL client: geofence, heading, sticky gantry, feed polling.
class VslClient {
 public:
  struct Config {
    double acquire_radius_mi = kAcquireRadiusMiles;
    double poll_period = 5.0;
    double heading_window = 2.0;
  };

  struct Result {
    VslReading reading;
    bool in_corridor = false;
    bool acquired = false;
  };

  VslClient() : VslClient(Config{}) {}
  explicit VslClient(Config cfg);

  Result update(double now, double mile_marker, const CorridorMap& map,
                const FeedClient& feed);
  const VslReading& reading() const { return reading_; }

 private:
  Config cfg_;
  HeadingEstimator heading_;
  GantryTracker tracker_;
  FetchScheduler scheduler_;
  VslReading reading_;
};

}  // namespace middleway

#endif  // MIDDLEWAY_INFRASTRUCTURE_HPP

/*
 * Copyright 2026 The eta-fuse Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef ETAFUSE_TRIP_DATA_HPP_
#define ETAFUSE_TRIP_DATA_HPP_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace etafuse {

using Date = std::chrono::year_month_day;

// Parses `YYYY-MM-DD`; throws ValidationError on malformed or impossible
// dates.
Date parse_date(std::string_view text);
std::string format_date(Date date);

inline constexpr int kSlicesPerDay = 288;

// Road condition of a link at departure.
enum class LinkStatus : int { kUnknown = 0, kFree = 1, kSlow = 2, kCongested = 3 };

struct LinkStep {
  std::int64_t link_id = 0;
  double link_time = 0.0;   // seconds
  double link_ratio = 1.0;  // fraction of the link traversed
  int link_status = 0;      // LinkStatus as an integer in [0, 3]

  bool operator==(const LinkStep&) const = default;
};

struct CrossStep {
  std::int64_t cross_id = 0;
  double cross_time = 0.0;  // seconds

  bool operator==(const CrossStep&) const = default;
};

struct TripHeader {
  std::string order_id;
  double ata = 0.0;         // label: actual travel time, seconds
  double distance = 0.0;    // meters
  double simple_eta = 0.0;  // routing engine estimate, seconds
  std::int64_t driver_id = 0;
  int slice_id = 0;         // 5-minute departure bucket in [0, 287]
  Date date{};

  bool operator==(const TripHeader&) const = default;
};

struct Trip {
  TripHeader header;
  std::vector<LinkStep> links;
  std::vector<CrossStep> crosses;

  bool operator==(const Trip&) const = default;
};

// Throws ValidationError naming the first violated field.
void validate_trip(const Trip& trip);

// Trips file: one trip per line,
//   order_id ata distance simple_eta driver_id slice_id date|links|crosses
// with link steps `id:time:ratio:status` and cross steps `id:time`, each
// section space-separated. Blank lines are skipped.
std::vector<Trip> parse_trips(std::istream& in);
Trip parse_trip_line(std::string_view line, std::size_t line_number);
std::string serialize_trip(const Trip& trip);
void write_trips(std::ostream& out, std::span<const Trip> trips);

// Directed link adjacency with derived degree counts. Every link mentioned
// anywhere (as a source or a successor) has an entry in both degree maps.
class RoadNetwork {
 public:
  RoadNetwork() = default;
  // Empty successor lists are allowed (sink links).
  explicit RoadNetwork(std::map<std::int64_t, std::vector<std::int64_t>> successors);

  std::span<const std::int64_t> successors(std::int64_t link) const;
  std::size_t in_degree(std::int64_t link) const;
  std::size_t out_degree(std::int64_t link) const;
  bool contains(std::int64_t link) const { return in_degree_.contains(link); }

  // All links that appear as a source or a successor, ascending.
  std::vector<std::int64_t> links() const;
  std::size_t edge_count() const { return edge_count_; }
  const std::map<std::int64_t, std::vector<std::int64_t>>& adjacency() const {
    return successors_;
  }

  bool operator==(const RoadNetwork& other) const {
    return successors_ == other.successors_;
  }

 private:
  std::map<std::int64_t, std::vector<std::int64_t>> successors_;
  std::unordered_map<std::int64_t, std::size_t> in_degree_;
  std::unordered_map<std::int64_t, std::size_t> out_degree_;
  std::size_t edge_count_ = 0;
};

// `link_id succ,succ,...` per line. Duplicate source lines are an error;
// cycles and self-loops are allowed.
RoadNetwork parse_road_network(std::istream& in);
void write_road_network(std::ostream& out, const RoadNetwork& network);

struct WeatherRecord {
  Date date{};
  int weather_code = 0;
  double temp_low = 0.0;   // Celsius
  double temp_high = 0.0;  // Celsius

  bool operator==(const WeatherRecord&) const = default;
};

using WeatherTable = std::map<Date, WeatherRecord>;

// `date,weather_code,temp_low,temp_high` per line.
WeatherTable parse_weather(std::istream& in);
void write_weather(std::ostream& out, const WeatherTable& table);

enum class Truncation { kFront, kBack };

std::string_view truncation_name(Truncation mode);
Truncation parse_truncation(std::string_view text);

// Keeps the first (Front) or last (Back) max_len link steps. Header and
// crosses are untouched.
Trip truncate_links(const Trip& trip, std::size_t max_len, Truncation mode);
std::span<const LinkStep> truncated_view(std::span<const LinkStep> links,
                                         std::size_t max_len,
                                         Truncation mode);
std::span<const CrossStep> truncated_view(std::span<const CrossStep> crosses,
                                          std::size_t max_len,
                                          Truncation mode);

struct DateSplit {
  std::vector<Trip> train;
  std::vector<Trip> validation;
};

// train = trips dated strictly before `cutoff`; order is preserved.
DateSplit split_by_date(std::span<const Trip> trips, Date cutoff);

}  // namespace etafuse

#endif  // ETAFUSE_TRIP_DATA_HPP_

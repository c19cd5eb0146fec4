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

#include "etafuse/trip_data.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <set>
#include <utility>

#include "etafuse/error.hpp"
#include "etafuse/text_io.hpp"

namespace etafuse {

namespace {

struct Violation {
  std::string field;
  std::string detail;
};

std::optional<Violation> find_violation(const Trip& trip) {
  const TripHeader& h = trip.header;
  if (h.order_id.empty()) return Violation{"order_id", "must be non-empty"};
  if (!(h.ata > 0.0)) return Violation{"ata", "must be > 0"};
  if (!(h.distance > 0.0)) return Violation{"distance", "must be > 0"};
  if (!(h.simple_eta > 0.0)) return Violation{"simple_eta", "must be > 0"};
  if (h.driver_id < 0) return Violation{"driver_id", "must be >= 0"};
  if (h.slice_id < 0 || h.slice_id >= kSlicesPerDay) {
    return Violation{"slice_id", "must be in [0, 287]"};
  }
  if (!h.date.ok()) return Violation{"date", "invalid calendar date"};
  if (trip.links.empty()) return Violation{"links", "at least one link step required"};
  for (const LinkStep& step : trip.links) {
    if (step.link_id < 0) return Violation{"link_id", "must be >= 0"};
    if (!(step.link_time >= 0.0)) return Violation{"link_time", "must be >= 0"};
    if (!(step.link_ratio >= 0.0 && step.link_ratio <= 1.0)) {
      return Violation{"link_ratio", "must be in [0, 1]"};
    }
    if (step.link_status < 0 || step.link_status > 3) {
      return Violation{"link_status", "must be in {0, 1, 2, 3}"};
    }
  }
  for (const CrossStep& step : trip.crosses) {
    if (step.cross_id < 0) return Violation{"cross_id", "must be >= 0"};
    if (!(step.cross_time >= 0.0)) return Violation{"cross_time", "must be >= 0"};
  }
  if (trip.crosses.size() > trip.links.size()) {
    return Violation{"crosses", "more cross steps than link steps"};
  }
  return std::nullopt;
}

double parse_real(std::string_view token, std::size_t line, const char* field) {
  const auto value = try_parse_double(token);
  if (!value) {
    throw ParseError(line, field, "not a number: '" + std::string(token) + "'");
  }
  return *value;
}

std::int64_t parse_integer(std::string_view token, std::size_t line,
                           const char* field) {
  const auto value = try_parse_int(token);
  if (!value) {
    throw ParseError(line, field,
                     "not an integer: '" + std::string(token) + "'");
  }
  return *value;
}

// Space-separated tokens; a single separator between tokens is required.
std::vector<std::string_view> tokens(std::string_view text, std::size_t line,
                                     const char* section) {
  std::vector<std::string_view> parts = split(text, ' ');
  for (const auto part : parts) {
    if (part.empty()) {
      throw ParseError(line, section, "empty token (extra space?)");
    }
  }
  return parts;
}

}  // namespace

Date parse_date(std::string_view text) {
  const bool shape_ok = text.size() == 10 && text[4] == '-' && text[7] == '-';
  const auto year = shape_ok ? try_parse_int(text.substr(0, 4)) : std::nullopt;
  const auto month = shape_ok ? try_parse_int(text.substr(5, 2)) : std::nullopt;
  const auto day = shape_ok ? try_parse_int(text.substr(8, 2)) : std::nullopt;
  if (!year || !month || !day || *year < 0 || *month < 1 || *day < 1) {
    throw ValidationError("malformed date '" + std::string(text) +
                          "' (expected YYYY-MM-DD)");
  }
  const Date date{std::chrono::year{static_cast<int>(*year)},
                  std::chrono::month{static_cast<unsigned>(*month)},
                  std::chrono::day{static_cast<unsigned>(*day)}};
  if (!date.ok()) {
    throw ValidationError("impossible date '" + std::string(text) + "'");
  }
  return date;
}

std::string format_date(Date date) {
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "%04d-%02u-%02u",
                static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()),
                static_cast<unsigned>(date.day()));
  return buffer;
}

void validate_trip(const Trip& trip) {
  if (const auto violation = find_violation(trip)) {
    throw ValidationError("trip '" + trip.header.order_id + "': field '" +
                          violation->field + "': " + violation->detail);
  }
}

Trip parse_trip_line(std::string_view line, std::size_t line_number) {
  const auto sections = split(line, '|');
  if (sections.size() != 3) {
    throw ParseError(line_number, "sections",
                     "expected 3 '|'-separated sections, found " +
                         std::to_string(sections.size()));
  }

  const auto head = tokens(sections[0], line_number, "header");
  if (head.size() != 7) {
    throw ParseError(line_number, "header",
                     "expected 7 fields, found " + std::to_string(head.size()));
  }
  Trip trip;
  TripHeader& h = trip.header;
  h.order_id = std::string(head[0]);
  h.ata = parse_real(head[1], line_number, "ata");
  h.distance = parse_real(head[2], line_number, "distance");
  h.simple_eta = parse_real(head[3], line_number, "simple_eta");
  h.driver_id = parse_integer(head[4], line_number, "driver_id");
  const std::int64_t slice = parse_integer(head[5], line_number, "slice_id");
  if (slice < 0 || slice >= kSlicesPerDay) {
    throw ParseError(line_number, "slice_id", "must be in [0, 287]");
  }
  h.slice_id = static_cast<int>(slice);
  try {
    h.date = parse_date(head[6]);
  } catch (const ValidationError& e) {
    throw ParseError(line_number, "date", e.what());
  }

  if (sections[1].empty()) {
    throw ParseError(line_number, "links", "at least one link step required");
  }
  for (const auto step : tokens(sections[1], line_number, "links")) {
    const auto parts = split(step, ':');
    if (parts.size() != 4) {
      throw ParseError(line_number, "links",
                       "link step '" + std::string(step) +
                           "' must be id:time:ratio:status");
    }
    LinkStep link;
    link.link_id = parse_integer(parts[0], line_number, "link_id");
    link.link_time = parse_real(parts[1], line_number, "link_time");
    link.link_ratio = parse_real(parts[2], line_number, "link_ratio");
    const std::int64_t status = parse_integer(parts[3], line_number, "link_status");
    if (status < 0 || status > 3) {
      throw ParseError(line_number, "link_status", "must be in {0, 1, 2, 3}");
    }
    link.link_status = static_cast<int>(status);
    trip.links.push_back(link);
  }

  if (!sections[2].empty()) {
    for (const auto step : tokens(sections[2], line_number, "crosses")) {
      const auto parts = split(step, ':');
      if (parts.size() != 2) {
        throw ParseError(line_number, "crosses",
                         "cross step '" + std::string(step) +
                             "' must be id:time");
      }
      CrossStep cross;
      cross.cross_id = parse_integer(parts[0], line_number, "cross_id");
      cross.cross_time = parse_real(parts[1], line_number, "cross_time");
      trip.crosses.push_back(cross);
    }
  }

  if (const auto violation = find_violation(trip)) {
    throw ParseError(line_number, violation->field, violation->detail);
  }
  return trip;
}

std::vector<Trip> parse_trips(std::istream& in) {
  std::vector<Trip> trips;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    trips.push_back(parse_trip_line(line, line_number));
  }
  return trips;
}

std::string serialize_trip(const Trip& trip) {
  const TripHeader& h = trip.header;
  std::string out;
  out.reserve(64 + trip.links.size() * 24 + trip.crosses.size() * 12);
  out += h.order_id;
  out += ' ';
  out += format_double(h.ata);
  out += ' ';
  out += format_double(h.distance);
  out += ' ';
  out += format_double(h.simple_eta);
  out += ' ';
  out += std::to_string(h.driver_id);
  out += ' ';
  out += std::to_string(h.slice_id);
  out += ' ';
  out += format_date(h.date);
  out += '|';
  for (std::size_t i = 0; i < trip.links.size(); ++i) {
    const LinkStep& s = trip.links[i];
    if (i > 0) out += ' ';
    out += std::to_string(s.link_id);
    out += ':';
    out += format_double(s.link_time);
    out += ':';
    out += format_double(s.link_ratio);
    out += ':';
    out += std::to_string(s.link_status);
  }
  out += '|';
  for (std::size_t i = 0; i < trip.crosses.size(); ++i) {
    const CrossStep& s = trip.crosses[i];
    if (i > 0) out += ' ';
    out += std::to_string(s.cross_id);
    out += ':';
    out += format_double(s.cross_time);
  }
  return out;
}

void write_trips(std::ostream& out, std::span<const Trip> trips) {
  for (const Trip& trip : trips) out << serialize_trip(trip) << '\n';
}

RoadNetwork::RoadNetwork(
    std::map<std::int64_t, std::vector<std::int64_t>> successors)
    : successors_(std::move(successors)) {
  for (const auto& [link, next] : successors_) {
    out_degree_[link] = next.size();
    in_degree_.try_emplace(link, 0);
    edge_count_ += next.size();
    for (const std::int64_t succ : next) {
      ++in_degree_[succ];
      out_degree_.try_emplace(succ, 0);
    }
  }
}

std::span<const std::int64_t> RoadNetwork::successors(std::int64_t link) const {
  const auto it = successors_.find(link);
  if (it == successors_.end()) return {};
  return it->second;
}

std::size_t RoadNetwork::in_degree(std::int64_t link) const {
  const auto it = in_degree_.find(link);
  return it == in_degree_.end() ? 0 : it->second;
}

std::size_t RoadNetwork::out_degree(std::int64_t link) const {
  const auto it = out_degree_.find(link);
  return it == out_degree_.end() ? 0 : it->second;
}

std::vector<std::int64_t> RoadNetwork::links() const {
  std::vector<std::int64_t> ids;
  ids.reserve(in_degree_.size());
  for (const auto& [link, degree] : in_degree_) ids.push_back(link);
  std::sort(ids.begin(), ids.end());
  return ids;
}

RoadNetwork parse_road_network(std::istream& in) {
  std::map<std::int64_t, std::vector<std::int64_t>> successors;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto space = text.find(' ');
    const std::string_view head = text.substr(0, space);
    const std::int64_t link = parse_integer(head, line_number, "link_id");
    if (link < 0) throw ParseError(line_number, "link_id", "must be >= 0");
    std::vector<std::int64_t> next;
    if (space != std::string_view::npos) {
      const std::string_view rest = trim(text.substr(space + 1));
      if (!rest.empty()) {
        for (const auto token : split(rest, ',')) {
          const std::int64_t succ =
              parse_integer(trim(token), line_number, "successor_id");
          if (succ < 0) {
            throw ParseError(line_number, "successor_id", "must be >= 0");
          }
          next.push_back(succ);
        }
      }
    }
    if (!successors.emplace(link, std::move(next)).second) {
      throw ParseError(line_number, "link_id",
                       "duplicate link " + std::to_string(link));
    }
  }
  return RoadNetwork(std::move(successors));
}

void write_road_network(std::ostream& out, const RoadNetwork& network) {
  for (const auto& [link, next] : network.adjacency()) {
    out << link;
    if (!next.empty()) out << ' ';
    for (std::size_t i = 0; i < next.size(); ++i) {
      if (i > 0) out << ',';
      out << next[i];
    }
    out << '\n';
  }
}

WeatherTable parse_weather(std::istream& in) {
  WeatherTable table;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto fields = split(text, ',');
    if (fields.size() != 4) {
      throw ParseError(line_number, "record",
                       "expected date,weather_code,temp_low,temp_high");
    }
    WeatherRecord record;
    try {
      record.date = parse_date(trim(fields[0]));
    } catch (const ValidationError& e) {
      throw ParseError(line_number, "date", e.what());
    }
    record.weather_code = static_cast<int>(
        parse_integer(trim(fields[1]), line_number, "weather_code"));
    record.temp_low = parse_real(trim(fields[2]), line_number, "temp_low");
    record.temp_high = parse_real(trim(fields[3]), line_number, "temp_high");
    if (record.temp_low > record.temp_high) {
      throw ParseError(line_number, "temp_low", "exceeds temp_high");
    }
    if (!table.emplace(record.date, record).second) {
      throw ParseError(line_number, "date",
                       "duplicate date " + format_date(record.date));
    }
  }
  return table;
}

void write_weather(std::ostream& out, const WeatherTable& table) {
  for (const auto& [date, record] : table) {
    out << format_date(date) << ',' << record.weather_code << ','
        << format_double(record.temp_low) << ','
        << format_double(record.temp_high) << '\n';
  }
}

std::string_view truncation_name(Truncation mode) {
  return mode == Truncation::kFront ? "front" : "back";
}

Truncation parse_truncation(std::string_view text) {
  if (text == "front" || text == "Front") return Truncation::kFront;
  if (text == "back" || text == "Back") return Truncation::kBack;
  throw ValidationError("unknown truncation mode '" + std::string(text) +
                        "' (expected front or back)");
}

namespace {

template <typename T>
std::span<const T> truncate_span(std::span<const T> items, std::size_t max_len,
                                 Truncation mode) {
  if (items.size() <= max_len) return items;
  return mode == Truncation::kFront ? items.first(max_len)
                                    : items.last(max_len);
}

}  // namespace

std::span<const LinkStep> truncated_view(std::span<const LinkStep> links,
                                         std::size_t max_len,
                                         Truncation mode) {
  return truncate_span(links, max_len, mode);
}

std::span<const CrossStep> truncated_view(std::span<const CrossStep> crosses,
                                          std::size_t max_len,
                                          Truncation mode) {
  return truncate_span(crosses, max_len, mode);
}

Trip truncate_links(const Trip& trip, std::size_t max_len, Truncation mode) {
  const auto kept = truncated_view(std::span(trip.links), max_len, mode);
  Trip out{trip.header, {kept.begin(), kept.end()}, trip.crosses};
  return out;
}

DateSplit split_by_date(std::span<const Trip> trips, Date cutoff) {
  DateSplit split;
  for (const Trip& trip : trips) {
    if (trip.header.date < cutoff) {
      split.train.push_back(trip);
    } else {
      split.validation.push_back(trip);
    }
  }
  return split;
}

}  // namespace etafuse

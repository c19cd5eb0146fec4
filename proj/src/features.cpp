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

#include "etafuse/features.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "etafuse/error.hpp"
#include "etafuse/text_io.hpp"

namespace etafuse::features {

std::array<double, DenseFeatures::kWidth> DenseFeatures::as_array() const {
  return {link_time_sum,   link_time_max,   cross_time_sum,  cross_time_max,
          status_stats[0], status_stats[1], status_stats[2], status_stats[3],
          status_stats[4], avg_speed};
}

DenseFeatures nn_dense(const Trip& trip) {
  DenseFeatures f;
  for (const LinkStep& step : trip.links) {
    f.link_time_sum += step.link_time;
    f.link_time_max = std::max(f.link_time_max, step.link_time);
    f.status_stats[static_cast<std::size_t>(step.link_status)] += 1.0;
  }
  for (const CrossStep& step : trip.crosses) {
    f.cross_time_sum += step.cross_time;
    f.cross_time_max = std::max(f.cross_time_max, step.cross_time);
  }
  const auto s = static_cast<double>(trip.links.size());
  f.status_stats[4] = s > 0.0 ? (f.status_stats[2] + f.status_stats[3]) / s : 0.0;
  f.avg_speed = trip.header.distance / trip.header.simple_eta;
  return f;
}

namespace {

std::int32_t day_number(Date date) {
  return static_cast<std::int32_t>(
      std::chrono::sys_days{date}.time_since_epoch().count());
}

}  // namespace

DriverHistoryIndex DriverHistoryIndex::build(std::span<const Trip> trips) {
  DriverHistoryIndex index;
  for (const Trip& trip : trips) {
    index.orders_[trip.header.driver_id].push_back(
        {day_number(trip.header.date), trip.header.slice_id});
  }
  for (auto& [driver, entries] : index.orders_) {
    std::sort(entries.begin(), entries.end());
  }
  return index;
}

std::pair<int, int> DriverHistoryIndex::previous_slices(std::int64_t driver_id,
                                                        Date date,
                                                        int slice_id) const {
  const auto it = orders_.find(driver_id);
  if (it == orders_.end()) return {kMissingToken, kMissingToken};
  const std::vector<Entry>& entries = it->second;
  const Entry query{day_number(date), slice_id};
  const auto earlier = static_cast<std::size_t>(
      std::lower_bound(entries.begin(), entries.end(), query) - entries.begin());
  const int last = earlier >= 1 ? entries[earlier - 1].slice_id : kMissingToken;
  const int second = earlier >= 2 ? entries[earlier - 2].slice_id : kMissingToken;
  return {last, second};
}

CategoricalFeatures nn_categorical(const Trip& trip,
                                   const DriverHistoryIndex& history) {
  CategoricalFeatures f;
  f.driver_id = trip.header.driver_id;
  f.slice_id = trip.header.slice_id;
  std::tie(f.last_order_slice, f.second_last_order_slice) = history.previous_slices(
      trip.header.driver_id, trip.header.date, trip.header.slice_id);
  return f;
}

TimeFeatures time_features(const TripHeader& header) {
  TimeFeatures f;
  const std::chrono::weekday weekday{std::chrono::sys_days{header.date}};
  f.is_weekend = (weekday == std::chrono::Saturday || weekday == std::chrono::Sunday) ? 1 : 0;
  f.hour = header.slice_id / 12;
  f.is_rush = ((f.hour >= 7 && f.hour < 9) || (f.hour >= 17 && f.hour < 19)) ? 1 : 0;
  if (header.slice_id < 96) {
    f.day_bin = DayBin::kEarly;
  } else if (header.slice_id < 192) {
    f.day_bin = DayBin::kMiddle;
  } else {
    f.day_bin = DayBin::kLate;
  }
  return f;
}

std::array<double, kStatisticalWidth> statistical_features(const Trip& trip) {
  const DenseFeatures dense = nn_dense(trip);
  const auto n_links = static_cast<double>(trip.links.size());
  const auto n_crosses = static_cast<double>(trip.crosses.size());
  double congested_time = 0.0;
  for (const LinkStep& step : trip.links) {
    if (step.link_status >= 2) congested_time += step.link_time;
  }
  const double distance = trip.header.distance;
  const double congestion_distance =
      dense.link_time_sum > 0.0 ? distance * (congested_time / dense.link_time_sum) : 0.0;
  return {
      n_links,
      n_crosses,
      dense.link_time_sum,
      dense.link_time_max,
      n_links > 0.0 ? dense.link_time_sum / n_links : 0.0,
      dense.cross_time_sum,
      dense.cross_time_max,
      n_crosses > 0.0 ? dense.cross_time_sum / n_crosses : 0.0,
      dense.avg_speed,
      n_links > 0.0 ? distance / n_links : 0.0,
      congestion_distance,
      trip.header.simple_eta,
  };
}

const std::array<const char*, kStatisticalWidth>& statistical_feature_names() {
  static const std::array<const char*, kStatisticalWidth> kNames = {
      "link_count",      "cross_count",    "link_time_sum",
      "link_time_max",   "link_time_mean", "cross_time_sum",
      "cross_time_max",  "cross_time_mean", "avg_speed",
      "avg_link_distance", "congestion_distance", "simple_eta"};
  return kNames;
}

TopologyFeatures topology_features(const Trip& trip, const RoadNetwork& network) {
  TopologyFeatures f;
  for (const LinkStep& step : trip.links) {
    f.upstream_sum += static_cast<double>(network.in_degree(step.link_id));
    f.downstream_sum += static_cast<double>(network.out_degree(step.link_id));
  }
  return f;
}

void FeatureSchema::check_unique() const {
  std::set<std::string> seen;
  for (const FeatureColumn& column : columns) {
    if (!seen.insert(column.name).second) {
      throw ValidationError("duplicate feature column '" + column.name + "'");
    }
  }
}

FeatureMatrix::FeatureMatrix(FeatureSchema schema) : schema_(std::move(schema)) {
  schema_.check_unique();
}

void FeatureMatrix::append_row(std::span<const double> row) {
  if (row.size() != cols()) {
    throw ValidationError("feature row has " + std::to_string(row.size()) +
                          " values, schema has " + std::to_string(cols()));
  }
  values_.insert(values_.end(), row.begin(), row.end());
  ++n_rows_;
}

void write_feature_matrix(std::ostream& out, const FeatureMatrix& matrix) {
  const auto& columns = matrix.schema().columns;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (j > 0) out << ',';
    out << columns[j].name << ':'
        << (columns[j].kind == ColumnKind::kCategorical ? "categorical" : "numeric");
  }
  out << '\n';
  std::string line;
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    line.clear();
    const auto row = matrix.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) line += ',';
      line += format_double(row[j]);
    }
    line += '\n';
    out << line;
  }
}

FeatureMatrix read_feature_matrix(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(1, "header", "missing feature schema header");
  }
  FeatureSchema schema;
  for (const auto entry : split(trim(line), ',')) {
    const auto colon = entry.rfind(':');
    if (colon == std::string_view::npos) {
      throw ParseError(1, "header", "column '" + std::string(entry) + "' lacks a kind");
    }
    const auto kind = entry.substr(colon + 1);
    if (kind != "numeric" && kind != "categorical") {
      throw ParseError(1, "header", "unknown column kind '" + std::string(kind) + "'");
    }
    schema.add(std::string(entry.substr(0, colon)),
               kind == "categorical" ? ColumnKind::kCategorical : ColumnKind::kNumeric);
  }
  FeatureMatrix matrix(std::move(schema));
  std::vector<double> row;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    const auto text = trim(line);
    if (text.empty()) continue;
    row.clear();
    for (const auto token : split(text, ',')) {
      const auto value = try_parse_double(token);
      if (!value) {
        throw ParseError(line_number, "value", "not a number: '" + std::string(token) + "'");
      }
      row.push_back(*value);
    }
    if (row.size() != matrix.cols()) {
      throw ParseError(line_number, "row",
                       "expected " + std::to_string(matrix.cols()) + " values, found " +
                           std::to_string(row.size()));
    }
    matrix.append_row(row);
  }
  return matrix;
}

}  // namespace etafuse::features

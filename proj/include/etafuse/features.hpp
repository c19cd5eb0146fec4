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

#ifndef ETAFUSE_FEATURES_HPP_
#define ETAFUSE_FEATURES_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "etafuse/trip_data.hpp"

namespace etafuse::features {

// Missing-value sentinel shared by categorical tokens and feature columns.
inline constexpr int kMissingToken = -999;
inline constexpr double kMissing = -999.0;

// Per-trip dense inputs for the sequence network.
struct DenseFeatures {
  static constexpr std::size_t kWidth = 10;

  double link_time_sum = 0.0;
  double link_time_max = 0.0;
  double cross_time_sum = 0.0;
  double cross_time_max = 0.0;
  // Counts of link status 0, 1, 2, 3, then the congested fraction
  // (status >= 2) over all link steps.
  std::array<double, 5> status_stats{};
  double avg_speed = 0.0;  // distance / simple_eta

  std::array<double, kWidth> as_array() const;
  bool operator==(const DenseFeatures&) const = default;
};

DenseFeatures nn_dense(const Trip& trip);

struct CategoricalFeatures {
  std::int64_t driver_id = 0;
  int slice_id = 0;
  int last_order_slice = kMissingToken;
  int second_last_order_slice = kMissingToken;

  bool operator==(const CategoricalFeatures&) const = default;
};

// Past orders per driver, sorted by (date, slice_id). Queries only see
// orders strictly earlier than the query point.
class DriverHistoryIndex {
 public:
  static DriverHistoryIndex build(std::span<const Trip> trips);

  // Slices of the most recent and second most recent strictly earlier
  // orders, with kMissingToken where there is no such order.
  std::pair<int, int> previous_slices(std::int64_t driver_id, Date date,
                                      int slice_id) const;

  std::size_t driver_count() const { return orders_.size(); }

 private:
  struct Entry {
    std::int32_t day;  // days since epoch
    int slice_id;
    auto operator<=>(const Entry&) const = default;
  };
  std::unordered_map<std::int64_t, std::vector<Entry>> orders_;
};

CategoricalFeatures nn_categorical(const Trip& trip,
                                   const DriverHistoryIndex& history);

enum class DayBin : int { kEarly = 0, kMiddle = 1, kLate = 2 };

struct TimeFeatures {
  int is_weekend = 0;
  int hour = 0;
  int is_rush = 0;
  DayBin day_bin = DayBin::kEarly;
};

// hour = slice_id / 12; rush hours are [7, 9) and [17, 19); day bins split
// the 288 slices into thirds.
TimeFeatures time_features(const TripHeader& header);

inline constexpr std::size_t kStatisticalWidth = 12;

// link count, cross count, link_time sum/max/mean, cross_time sum/max/mean,
// avg speed, avg link distance, congestion distance, simple_eta.
std::array<double, kStatisticalWidth> statistical_features(const Trip& trip);
const std::array<const char*, kStatisticalWidth>& statistical_feature_names();

struct TopologyFeatures {
  double upstream_sum = 0.0;    // sum of in-degrees over the link steps
  double downstream_sum = 0.0;  // sum of out-degrees over the link steps
};

TopologyFeatures topology_features(const Trip& trip, const RoadNetwork& network);

enum class ColumnKind { kNumeric, kCategorical };

struct FeatureColumn {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  bool operator==(const FeatureColumn&) const = default;
};

struct FeatureSchema {
  std::vector<FeatureColumn> columns;

  std::size_t size() const { return columns.size(); }
  void add(std::string name, ColumnKind kind = ColumnKind::kNumeric) {
    columns.push_back({std::move(name), kind});
  }
  // Throws ValidationError on duplicate names.
  void check_unique() const;
  bool operator==(const FeatureSchema&) const = default;
};

// Row-major n_rows x n_cols matrix described by a schema.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(FeatureSchema schema);

  const FeatureSchema& schema() const { return schema_; }
  std::size_t rows() const { return n_rows_; }
  std::size_t cols() const { return schema_.size(); }

  std::span<const double> row(std::size_t i) const {
    return std::span(values_).subspan(i * cols(), cols());
  }
  double at(std::size_t i, std::size_t j) const { return values_[i * cols() + j]; }
  const std::vector<double>& values() const { return values_; }

  // Throws ValidationError if the row width differs from the schema.
  void append_row(std::span<const double> row);

 private:
  FeatureSchema schema_;
  std::size_t n_rows_ = 0;
  std::vector<double> values_;
};

// Header line `name:kind,...` then one comma-separated row per line.
void write_feature_matrix(std::ostream& out, const FeatureMatrix& matrix);
FeatureMatrix read_feature_matrix(std::istream& in);

}  // namespace etafuse::features

#endif  // ETAFUSE_FEATURES_HPP_

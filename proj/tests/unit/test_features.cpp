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

#include "doctest.h"

#include <cmath>
#include <sstream>

#include "etafuse/error.hpp"
#include "etafuse/rng.hpp"
#include "etafuse/features.hpp"
#include "etafuse/seqcnn/model.hpp"
#include "etafuse/seqcnn/train.hpp"
#include "etafuse/skipgram.hpp"
#include "etafuse/tree_features.hpp"
#include "../common/test_util.hpp"

using namespace etafuse;
using namespace etafuse::features;
using etafuse::testing::make_trip;
using etafuse::testing::ymd;

namespace {

Trip two_link_trip() {
  Trip t = make_trip("o1", {12, 15}, {9});
  t.links[0] = {12, 30.0, 1.0, 1};
  t.links[1] = {15, 25.5, 0.5, 3};
  t.crosses[0] = {9, 4.0};
  t.header.distance = 3200.0;
  t.header.simple_eta = 560.0;
  t.header.ata = 610.0;
  return t;
}

RoadNetwork small_network() {
  return RoadNetwork({{1, {2, 3}}, {2, {3}}});
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

// A small trained d9/front network shared by the transfer tests.
struct TransferFixture {
  etafuse::testing::SmallWorld world = etafuse::testing::small_world(160, 21, 25);
  DriverHistoryIndex history = DriverHistoryIndex::build(world.trips);
  seqcnn::SeqCnnModel model;
  LinkEmbeddingTable skipgram;

  TransferFixture() {
    auto cfg = etafuse::testing::tiny_model_config(9, Truncation::kFront);
    cfg.epochs = 1;
    model = seqcnn::SeqCnnModel::initialize(cfg, world.trips);
    const auto samples = seqcnn::make_samples(world.trips, history);
    seqcnn::train(model, samples, {});
    SkipGramConfig sg;
    sg.dim = 4;
    sg.epochs = 1;
    skipgram = train_skipgram(link_corpus(world.trips), sg);
  }

  TreeFeatureContext context() const {
    return {&world.network, &history, &skipgram, &model, &world.weather};
  }
};

}  // namespace

TEST_CASE("dense features by hand") {
  const DenseFeatures f = nn_dense(two_link_trip());
  CHECK(f.link_time_sum == 55.5);
  CHECK(f.link_time_max == 30.0);
  CHECK(f.cross_time_sum == 4.0);
  CHECK(f.cross_time_max == 4.0);
  CHECK(f.status_stats[0] == 0.0);
  CHECK(f.status_stats[1] == 1.0);
  CHECK(f.status_stats[2] == 0.0);
  CHECK(f.status_stats[3] == 1.0);
  CHECK(f.status_stats[4] == 0.5);
  CHECK(f.avg_speed == 3200.0 / 560.0);

  Trip single = make_trip("s", {4});
  single.links[0].link_status = 0;
  const DenseFeatures g = nn_dense(single);
  CHECK(g.status_stats == std::array<double, 5>{1, 0, 0, 0, 0});
  CHECK(g.cross_time_sum == 0.0);
  CHECK(g.cross_time_max == 0.0);
}

TEST_CASE("dense status counts sum to the sequence length") {
  const auto world = etafuse::testing::small_world(200, 2);
  for (const Trip& t : world.trips) {
    const DenseFeatures f = nn_dense(t);
    const double s = static_cast<double>(t.links.size());
    CHECK(f.status_stats[0] + f.status_stats[1] + f.status_stats[2] + f.status_stats[3] == s);
    CHECK(f.status_stats[4] == (f.status_stats[2] + f.status_stats[3]) / s);
    CHECK(f.status_stats[4] >= 0.0);
    CHECK(f.status_stats[4] <= 1.0);
    CHECK(f.link_time_max <= f.link_time_sum);
    CHECK(f.cross_time_max <= f.cross_time_sum);
  }
}

TEST_CASE("driver history lookups") {
  const Date d = ymd(2020, 8, 10);
  std::vector<Trip> past{make_trip("a", {1}, {}, 7, 50, d), make_trip("b", {1}, {}, 7, 100, d),
                         make_trip("c", {1}, {}, 8, 100, ymd(2020, 8, 9))};
  const auto index = DriverHistoryIndex::build(past);
  CHECK(index.driver_count() == 2);
  // No prior orders: unknown driver, or the first order of the day.
  CHECK(index.previous_slices(99, d, 200) == std::pair{-999, -999});
  CHECK(index.previous_slices(7, d, 50) == std::pair{-999, -999});
  CHECK(index.previous_slices(8, d, 0) == std::pair{100, -999});
  CHECK(index.previous_slices(7, d, 120) == std::pair{100, 50});
  // Orders are compared by date before slice.
  CHECK(index.previous_slices(7, ymd(2020, 8, 11), 0) == std::pair{100, 50});
  CHECK(index.previous_slices(7, ymd(2020, 8, 9), 280) == std::pair{-999, -999});

  // Input order does not matter.
  std::vector<Trip> reversed(past.rbegin(), past.rend());
  const auto again = DriverHistoryIndex::build(reversed);
  CHECK(again.previous_slices(7, d, 120) == std::pair{100, 50});

  const Trip q = make_trip("q", {1}, {}, 7, 84, d);
  const CategoricalFeatures cats = nn_categorical(q, index);
  CHECK(cats.driver_id == 7);
  CHECK(cats.slice_id == 84);
  CHECK(cats.last_order_slice == 50);
  CHECK(cats.second_last_order_slice == -999);
}

TEST_CASE("an order never sees itself in history") {
  const auto world = etafuse::testing::small_world(300, 5);
  const auto index = DriverHistoryIndex::build(world.trips);
  for (const Trip& t : world.trips) {
    int earlier = 0;
    for (const Trip& o : world.trips) {
      if (o.header.driver_id != t.header.driver_id) continue;
      if (o.header.date < t.header.date ||
          (o.header.date == t.header.date && o.header.slice_id < t.header.slice_id)) {
        ++earlier;
      }
    }
    const auto [last, second] = index.previous_slices(t.header.driver_id, t.header.date,
                                                      t.header.slice_id);
    CHECK((last == -999) == (earlier == 0));
    CHECK((second == -999) == (earlier < 2));
  }
}

TEST_CASE("time features") {
  TripHeader h = make_trip("t", {1}).header;
  h.slice_id = 84;
  TimeFeatures f = time_features(h);
  CHECK(f.hour == 7);
  CHECK(f.is_rush == 1);
  h.slice_id = 0;
  f = time_features(h);
  CHECK(f.hour == 0);
  CHECK(f.is_rush == 0);
  CHECK(f.day_bin == DayBin::kEarly);
  h.date = ymd(2020, 8, 2);
  CHECK(time_features(h).is_weekend == 1);
  h.date = ymd(2020, 8, 1);
  CHECK(time_features(h).is_weekend == 1);
  h.date = ymd(2020, 8, 3);
  CHECK(time_features(h).is_weekend == 0);
}

TEST_CASE("time features over every slice") {
  TripHeader h = make_trip("t", {1}).header;
  for (int s = 0; s < 288; ++s) {
    h.slice_id = s;
    const TimeFeatures f = time_features(h);
    const int minutes = s * 5;
    CHECK(f.hour == minutes / 60);
    const bool rush = (minutes >= 7 * 60 && minutes < 9 * 60) ||
                      (minutes >= 17 * 60 && minutes < 19 * 60);
    CHECK(f.is_rush == (rush ? 1 : 0));
    const DayBin bin = minutes < 8 * 60 ? DayBin::kEarly
                       : minutes < 16 * 60 ? DayBin::kMiddle
                                           : DayBin::kLate;
    CHECK(f.day_bin == bin);
  }
}

TEST_CASE("statistical features") {
  const auto v = statistical_features(two_link_trip());
  CHECK(v[0] == 2.0);
  CHECK(v[1] == 1.0);
  CHECK(v[2] == 55.5);
  CHECK(v[3] == 30.0);
  CHECK(v[4] == 27.75);
  CHECK(v[5] == 4.0);
  CHECK(v[6] == 4.0);
  CHECK(v[7] == 4.0);
  CHECK(v[8] == 3200.0 / 560.0);
  CHECK(v[9] == 1600.0);
  CHECK(v[10] == doctest::Approx(3200.0 * 25.5 / 55.5).epsilon(1e-14));
  CHECK(v[11] == 560.0);
  CHECK(std::string(statistical_feature_names()[10]) == "congestion_distance");

  Trip free_flow = two_link_trip();
  for (auto& s : free_flow.links) s.link_status = 1;
  CHECK(statistical_features(free_flow)[10] == 0.0);
  Trip jammed = two_link_trip();
  for (auto& s : jammed.links) s.link_status = 2;
  CHECK(statistical_features(jammed)[10] == 3200.0);
  Trip zero = two_link_trip();
  for (auto& s : zero.links) s.link_time = 0.0;
  CHECK(statistical_features(zero)[10] == 0.0);
}

TEST_CASE("topology degree sums") {
  const RoadNetwork net = small_network();
  const auto a = topology_features(make_trip("a", {1, 2}), net);
  CHECK(a.downstream_sum == 3.0);
  CHECK(a.upstream_sum == 1.0);
  const auto b = topology_features(make_trip("b", {3}), net);
  CHECK(b.downstream_sum == 0.0);
  CHECK(b.upstream_sum == 2.0);
  const auto c = topology_features(make_trip("c", {40, 41}), net);
  CHECK(c.downstream_sum == 0.0);
  CHECK(c.upstream_sum == 0.0);
}

TEST_CASE("skip-gram is deterministic and separates co-occurring links") {
  // Links 1 and 2 always travel together among links 10..14; link 3 only
  // ever appears among links 20..24.
  SkipGramConfig cfg;
  cfg.dim = 8;
  cfg.window = 2;
  cfg.epochs = 5;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Rng rng(seed);
    std::vector<std::vector<std::int64_t>> corpus;
    for (int i = 0; i < 300; ++i) {
      std::vector<std::int64_t> s;
      std::vector<std::int64_t> t;
      for (int k = 0; k < 6; ++k) {
        s.push_back(10 + static_cast<std::int64_t>(rng.below(5)));
        t.push_back(20 + static_cast<std::int64_t>(rng.below(5)));
      }
      s.insert(s.begin() + static_cast<std::ptrdiff_t>(rng.below(7)), {1, 2});
      t.insert(t.begin() + static_cast<std::ptrdiff_t>(rng.below(7)), 3);
      corpus.push_back(s);
      corpus.push_back(t);
    }
    cfg.seed = seed;
    const auto table = train_skipgram(corpus, cfg);
    CHECK(table == train_skipgram(corpus, cfg));
    CHECK(table.vocabulary_size() == 13);
    CHECK(cosine(table.lookup(1), table.lookup(2)) > cosine(table.lookup(1), table.lookup(3)));
    for (const double x : table.lookup(77)) CHECK(x == 0.0);
    CHECK_FALSE(table.contains(77));
  }
  const std::vector<std::vector<std::int64_t>> corpus{{1, 2, 3}};

  CHECK_THROWS_AS(train_skipgram({}, cfg), ValidationError);
  cfg.dim = 1;
  CHECK_THROWS_AS(train_skipgram(corpus, cfg), ValidationError);
}

TEST_CASE("sequence embedding is the mean of link vectors") {
  const LinkEmbeddingTable table(2, {1, 2}, {1.0, 0.0, 0.0, 1.0});
  CHECK(sequence_embedding_feature(make_trip("a", {1, 2}), table) ==
        std::vector<double>{0.5, 0.5});
  CHECK(sequence_embedding_feature(make_trip("b", {2}), table) == std::vector<double>{0.0, 1.0});
  CHECK(sequence_embedding_feature(make_trip("c", {8, 9}), table) ==
        std::vector<double>{0.0, 0.0});
  // Unknown links count in the denominator.
  CHECK(sequence_embedding_feature(make_trip("d", {1, 9}), table) ==
        std::vector<double>{0.5, 0.0});

  std::ostringstream out;
  write_embedding_table(out, table);
  std::istringstream in(out.str());
  CHECK(read_embedding_table(in) == table);
}

TEST_CASE("embedding transfer needs a trained network") {
  const auto world = etafuse::testing::small_world(40, 3, 10);
  const auto model =
      seqcnn::SeqCnnModel::initialize(etafuse::testing::tiny_model_config(9), world.trips);
  CHECK_THROWS_AS(nn_embedding_transfer(world.trips[0], CategoricalFeatures{}, model),
                  ValidationError);
}

TEST_CASE("embedding transfer layout") {
  const TransferFixture fx;
  const auto& model = fx.model;
  Trip t = fx.world.trips[0];
  const CategoricalFeatures cats = nn_categorical(t, fx.history);
  const auto v = nn_embedding_transfer(t, cats, model);
  REQUIRE(v.size() == 54);
  CHECK(v == nn_embedding_transfer(t, cats, model));

  // Link part: mean of the link embedding rows.
  for (int k = 0; k < 9; ++k) {
    double sum = 0.0;
    for (const LinkStep& s : t.links) {
      sum += model.link_embedding.weight.value(
          static_cast<seqcnn::Index>(model.link_vocab.row(s.link_id)), k);
    }
    CHECK(v[k] == doctest::Approx(sum / static_cast<double>(t.links.size())).epsilon(1e-12));
  }
  // Slice part: the slice embedding row.
  for (int k = 0; k < 9; ++k) {
    CHECK(v[18 + k] == model.slice_embedding.weight.value(cats.slice_id, k));
  }

  t.crosses.clear();
  const auto no_cross = nn_embedding_transfer(t, cats, model);
  for (int k = 9; k < 18; ++k) CHECK(no_cross[k] == 0.0);
}

TEST_CASE("tree feature schema and rows") {
  const TransferFixture fx;
  const auto ctx = fx.context();
  const FeatureSchema schema = tree_feature_schema(ctx);
  const std::size_t e = fx.skipgram.dim();
  CHECK(schema.size() == 12 + 4 + 2 + 4 + 3 + e + 54);
  CHECK_NOTHROW(schema.check_unique());
  CHECK(schema.columns[12].name == "is_weekend");
  CHECK(schema.columns[18].kind == ColumnKind::kCategorical);
  CHECK(schema.columns[25].name == "w2v_0");
  CHECK(schema.columns[25 + e].name == "nn_d9_front.link_0");
  CHECK(schema.columns.back().name == "nn_d9_front.second_last_order_8");

  const Trip& t = fx.world.trips[3];
  const FeatureRow row = assemble_tree_features(t, ctx);
  CHECK(row.schema == schema);
  REQUIRE(row.values.size() == schema.size());
  CHECK(row.values == assemble_tree_features(t, ctx).values);
  const auto stats = statistical_features(t);
  for (std::size_t j = 0; j < 12; ++j) CHECK(row.values[j] == stats[j]);
  CHECK(row.values[13] == t.header.slice_id / 12);
  const auto& w = fx.world.weather.at(t.header.date);
  CHECK(row.values[22] == w.weather_code);
  CHECK(row.values[23] == w.temp_low);
  CHECK(row.values[24] == w.temp_high);

  Trip off_range = t;
  off_range.header.date = ymd(2021, 1, 1);
  const FeatureRow missing = assemble_tree_features(off_range, ctx);
  CHECK(missing.values[22] == -999.0);
  CHECK(missing.values[23] == -999.0);
  CHECK(missing.values[24] == -999.0);

  const FeatureMatrix m = build_tree_features(fx.world.trips, ctx);
  CHECK(m.rows() == fx.world.trips.size());
  CHECK(m.schema() == schema);
}

TEST_CASE("transfer requires the front d9 network") {
  const auto world = etafuse::testing::small_world(60, 8, 10);
  const auto history = DriverHistoryIndex::build(world.trips);
  auto cfg = etafuse::testing::tiny_model_config(15, Truncation::kBack);
  cfg.epochs = 1;
  auto model = seqcnn::SeqCnnModel::initialize(cfg, world.trips);
  const auto samples = seqcnn::make_samples(world.trips, history);
  seqcnn::train(model, samples, {});
  const LinkEmbeddingTable sg(2, {1}, {1.0, 1.0});
  const TreeFeatureContext ctx{&world.network, &history, &sg, &model, &world.weather};
  try {
    tree_feature_schema(ctx);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("nn_d15_back") != std::string::npos);
  }
  TreeFeatureContext incomplete = ctx;
  incomplete.weather = nullptr;
  CHECK_THROWS_AS(tree_feature_schema(incomplete), ValidationError);
}

TEST_CASE("feature matrix round trip and width checks") {
  FeatureSchema schema;
  schema.add("a");
  schema.add("b", ColumnKind::kCategorical);
  FeatureMatrix m(schema);
  m.append_row(std::vector<double>{1.5, -999.0});
  m.append_row(std::vector<double>{0.1, 3.0});
  CHECK_THROWS_AS(m.append_row(std::vector<double>{1.0}), ValidationError);
  std::ostringstream out;
  write_feature_matrix(out, m);
  CHECK(out.str() == "a:numeric,b:categorical\n1.5,-999\n0.1,3\n");
  std::istringstream in(out.str());
  const FeatureMatrix back = read_feature_matrix(in);
  CHECK(back.schema() == schema);
  CHECK(back.values() == m.values());

  FeatureSchema dup;
  dup.add("a");
  dup.add("a");
  CHECK_THROWS_AS(dup.check_unique(), ValidationError);
}

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

#ifndef ETAFUSE_TESTS_TEST_UTIL_HPP_
#define ETAFUSE_TESTS_TEST_UTIL_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "etafuse/rng.hpp"
#include "etafuse/seqcnn/model.hpp"
#include "etafuse/synthgen.hpp"
#include "etafuse/trip_data.hpp"

namespace etafuse::testing {

inline Date ymd(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

// A trip with the given link ids; every step is 10 s, ratio 1, status 1.
inline Trip make_trip(std::string id, std::vector<std::int64_t> links,
                      std::vector<std::int64_t> crosses = {}, std::int64_t driver = 1,
                      int slice = 84, Date date = ymd(2020, 8, 3)) {
  Trip t;
  t.header.order_id = std::move(id);
  t.header.ata = 100.0;
  t.header.distance = 1000.0;
  t.header.simple_eta = 90.0;
  t.header.driver_id = driver;
  t.header.slice_id = slice;
  t.header.date = date;
  for (const std::int64_t l : links) t.links.push_back({l, 10.0, 1.0, 1});
  for (const std::int64_t c : crosses) t.crosses.push_back({c, 5.0});
  return t;
}

// Small synthetic world shared by the model tests.
struct SmallWorld {
  RoadNetwork network;
  std::vector<Trip> trips;
  WeatherTable weather;
};

inline SmallWorld small_world(int n_trips = 200, std::uint64_t seed = 11, int max_walk = 40) {
  synth::SynthConfig c;
  c.n_links = 120;
  c.n_drivers = 30;
  c.n_trips = n_trips;
  c.max_walk = max_walk;
  c.seed = seed;
  SmallWorld w;
  w.network = synth::generate_network(c);
  w.trips = synth::generate_trips(w.network, c);
  w.weather = synth::generate_weather(c);
  return w;
}

// Narrow network so model tests stay fast.
inline seqcnn::ModelConfig tiny_model_config(int embed_dim = 4,
                                             Truncation mode = Truncation::kFront) {
  seqcnn::ModelConfig c;
  c.embed_dim = embed_dim;
  c.truncation = mode;
  c.max_seq_len = 30;
  c.cross_max_len = 30;
  c.mlp_widths = {16, 8};
  c.head_width = 8;
  c.batch_size = 16;
  c.epochs = 2;
  c.seed = 5;
  return c;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("etafuse_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace etafuse::testing

#endif  // ETAFUSE_TESTS_TEST_UTIL_HPP_

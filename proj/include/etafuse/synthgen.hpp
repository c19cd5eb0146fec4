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

#ifndef ETAFUSE_SYNTHGEN_HPP_
#define ETAFUSE_SYNTHGEN_HPP_

#include <cstdint>
#include <vector>

#include "etafuse/trip_data.hpp"

namespace etafuse::synth {

struct SynthConfig {
  int n_links = 2000;
  int n_drivers = 500;
  int n_trips = 20000;
  double noise_sd = 0.05;  // sd of the log-normal noise factor on ata
  std::uint64_t seed = 1;
  Date first_date{std::chrono::year{2020}, std::chrono::month{8}, std::chrono::day{1}};
  Date last_date{std::chrono::year{2020}, std::chrono::month{8}, std::chrono::day{31}};
  int min_walk = 5;
  int max_walk = 300;
  double cross_probability = 0.5;  // chance of an intersection between two links
  // When false every link step is free-flowing (status 1).
  bool congestion = true;
  // When false the daily profile is the constant 1.
  bool daily_profile = true;
};

// Throws ValidationError on an invalid configuration.
void validate(const SynthConfig& config);

// Travel-time multiplier per link status: (1.0, 1.0, 1.4, 2.0).
double congestion_multiplier(int link_status);

// Smooth daily travel-time profile over the 288 slices: a morning peak
// near 08:00, an evening peak near 18:00, and a shallow night dip.
double daily_profile(int slice_id);

// Noise-free ground truth:
//   sum link_time * m(status) * g(slice) + sum cross_time
double ground_truth_travel_time(const Trip& trip, bool use_daily_profile);

// Connected digraph: a random Hamiltonian cycle plus up to three extra
// random successors per link, so every out-degree is in [1, 4].
RoadNetwork generate_network(const SynthConfig& config);

// Random walks on the network with congestion drawn from a time-of-day
// dependent distribution. simple_eta ignores congestion and the daily
// profile; ata applies both and then a log-normal noise factor.
std::vector<Trip> generate_trips(const RoadNetwork& network,
                                 const SynthConfig& config);

WeatherTable generate_weather(const SynthConfig& config);

}  // namespace etafuse::synth

#endif  // ETAFUSE_SYNTHGEN_HPP_

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

#include "etafuse/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "etafuse/error.hpp"
#include "etafuse/rng.hpp"

namespace etafuse::synth {

namespace {

double bump(double x, double center, double width) {
  const double z = (x - center) / width;
  return std::exp(-0.5 * z * z);
}

double round_to(double value, double quantum) {
  return std::round(value / quantum) * quantum;
}

// Per-link attributes used by the walk generator. They are a deterministic
// function of the seed, so trips and network stay consistent.
struct LinkAttributes {
  std::vector<double> base_time;         // seconds to traverse the whole link
  std::vector<double> speed;             // meters / second
  std::vector<double> congestion_bias;   // extra congestion propensity
  std::vector<double> cross_base_time;   // delay at the intersection entering the link
};

LinkAttributes make_attributes(const SynthConfig& config) {
  Rng rng(derive_seed(config.seed, "link-attributes"));
  LinkAttributes attrs;
  const auto n = static_cast<std::size_t>(config.n_links);
  attrs.base_time.resize(n);
  attrs.speed.resize(n);
  attrs.congestion_bias.resize(n);
  attrs.cross_base_time.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    attrs.base_time[i] = rng.uniform(5.0, 60.0);
    attrs.speed[i] = rng.uniform(6.0, 16.0);
    attrs.congestion_bias[i] = rng.uniform(0.0, 0.2);
    attrs.cross_base_time[i] = rng.uniform(3.0, 40.0);
  }
  return attrs;
}

// Probability that a step is slow or congested at this slice.
double congestion_level(int slice_id, double bias) {
  const double hour = (slice_id + 0.5) / 12.0;
  const double rush = std::max(bump(hour, 8.0, 1.0), bump(hour, 18.0, 1.25));
  return std::clamp(0.1 + 0.5 * rush + bias, 0.0, 0.95);
}

int draw_status(Rng& rng, int slice_id, double bias) {
  if (rng.bernoulli(0.05)) return static_cast<int>(LinkStatus::kUnknown);
  if (!rng.bernoulli(congestion_level(slice_id, bias))) {
    return static_cast<int>(LinkStatus::kFree);
  }
  return rng.bernoulli(0.6) ? static_cast<int>(LinkStatus::kSlow)
                            : static_cast<int>(LinkStatus::kCongested);
}

}  // namespace

void validate(const SynthConfig& config) {
  if (config.n_links < 4) throw ValidationError("synth: n_links must be >= 4");
  if (config.n_drivers < 1) throw ValidationError("synth: n_drivers must be >= 1");
  if (config.n_trips < 1) throw ValidationError("synth: n_trips must be >= 1");
  if (!(config.noise_sd >= 0.0)) throw ValidationError("synth: noise_sd must be >= 0");
  if (!config.first_date.ok() || !config.last_date.ok() ||
      config.last_date < config.first_date) {
    throw ValidationError("synth: date range is empty or invalid");
  }
  if (config.min_walk < 1 || config.max_walk < config.min_walk) {
    throw ValidationError("synth: walk length range is invalid");
  }
  if (!(config.cross_probability >= 0.0 && config.cross_probability <= 1.0)) {
    throw ValidationError("synth: cross_probability must be in [0, 1]");
  }
}

double congestion_multiplier(int link_status) {
  static constexpr double kMultiplier[4] = {1.0, 1.0, 1.4, 2.0};
  if (link_status < 0 || link_status > 3) {
    throw ValidationError("link_status out of range: " +
                          std::to_string(link_status));
  }
  return kMultiplier[link_status];
}

double daily_profile(int slice_id) {
  const double hour = (slice_id + 0.5) / 12.0;
  return 1.0 + 0.30 * bump(hour, 8.0, 1.0) + 0.35 * bump(hour, 18.0, 1.25) -
         0.10 * bump(hour, 3.0, 2.0);
}

double ground_truth_travel_time(const Trip& trip, bool use_daily_profile) {
  const double g = use_daily_profile ? daily_profile(trip.header.slice_id) : 1.0;
  double total = 0.0;
  for (const LinkStep& step : trip.links) {
    total += step.link_time * congestion_multiplier(step.link_status) * g;
  }
  for (const CrossStep& step : trip.crosses) total += step.cross_time;
  return total;
}

RoadNetwork generate_network(const SynthConfig& config) {
  validate(config);
  Rng rng(derive_seed(config.seed, "network"));
  const auto n = static_cast<std::size_t>(config.n_links);

  std::vector<std::int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(i + 1)]);
  }

  std::map<std::int64_t, std::vector<std::int64_t>> successors;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t link = order[i];
    std::vector<std::int64_t> next{order[(i + 1) % n]};
    const std::size_t extra = rng.below(4);
    for (std::size_t k = 0; k < extra; ++k) {
      const auto candidate = static_cast<std::int64_t>(rng.below(n));
      if (candidate == link ||
          std::find(next.begin(), next.end(), candidate) != next.end()) {
        continue;
      }
      next.push_back(candidate);
    }
    successors.emplace(link, std::move(next));
  }
  return RoadNetwork(std::move(successors));
}

std::vector<Trip> generate_trips(const RoadNetwork& network,
                                 const SynthConfig& config) {
  validate(config);
  const LinkAttributes attrs = make_attributes(config);
  Rng rng(derive_seed(config.seed, "trips"));
  const std::vector<std::int64_t> links = network.links();
  if (links.empty()) throw ValidationError("synth: network has no links");
  for (const std::int64_t id : links) {
    if (id < 0 || id >= config.n_links) {
      throw ValidationError("synth: network link id outside [0, n_links)");
    }
  }

  const std::chrono::sys_days first{config.first_date};
  const auto n_days =
      static_cast<std::uint64_t>((std::chrono::sys_days{config.last_date} - first).count() + 1);
  const auto walk_span = static_cast<std::uint64_t>(config.max_walk - config.min_walk + 1);

  std::vector<Trip> trips;
  trips.reserve(static_cast<std::size_t>(config.n_trips));
  for (int t = 0; t < config.n_trips; ++t) {
    Trip trip;
    TripHeader& h = trip.header;
    h.order_id = "o" + std::to_string(t);
    h.driver_id = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(config.n_drivers)));
    h.slice_id = static_cast<int>(rng.below(kSlicesPerDay));
    h.date = Date{first + std::chrono::days{static_cast<int>(rng.below(n_days))}};

    const auto length = static_cast<std::size_t>(config.min_walk) +
                        static_cast<std::size_t>(rng.below(walk_span));
    std::int64_t current = links[rng.below(links.size())];
    double distance = 0.0;
    for (std::size_t i = 0; i < length; ++i) {
      if (i > 0) {
        const auto next = network.successors(current);
        if (next.empty()) break;
        current = next[rng.below(next.size())];
        if (rng.bernoulli(config.cross_probability)) {
          const auto c = static_cast<std::size_t>(current);
          const double cross_time =
              round_to(attrs.cross_base_time[c] * rng.uniform(0.5, 1.5), 0.01);
          trip.crosses.push_back({current, cross_time});
        }
      }
      const auto l = static_cast<std::size_t>(current);
      const bool partial = i == 0 || i + 1 == length;
      const double ratio = partial ? round_to(rng.uniform(0.1, 1.0), 0.001) : 1.0;
      LinkStep step;
      step.link_id = current;
      step.link_ratio = ratio;
      step.link_time = std::max(
          0.01, round_to(attrs.base_time[l] * ratio * rng.uniform(0.8, 1.2), 0.01));
      step.link_status =
          config.congestion
              ? draw_status(rng, h.slice_id, attrs.congestion_bias[l])
              : static_cast<int>(LinkStatus::kFree);
      distance += attrs.base_time[l] * attrs.speed[l] * ratio;
      trip.links.push_back(step);
    }

    double simple_eta = 0.0;
    for (const LinkStep& step : trip.links) simple_eta += step.link_time;
    for (const CrossStep& step : trip.crosses) simple_eta += step.cross_time;
    h.simple_eta = simple_eta;
    h.distance = std::max(1.0, round_to(distance, 0.1));
    const double truth = ground_truth_travel_time(trip, config.daily_profile);
    const double noise = rng.normal();
    h.ata = config.noise_sd > 0.0 ? truth * std::exp(config.noise_sd * noise) : truth;
    trips.push_back(std::move(trip));
  }
  return trips;
}

WeatherTable generate_weather(const SynthConfig& config) {
  validate(config);
  Rng rng(derive_seed(config.seed, "weather"));
  WeatherTable table;
  for (std::chrono::sys_days d{config.first_date};
       d <= std::chrono::sys_days{config.last_date}; d += std::chrono::days{1}) {
    WeatherRecord record;
    record.date = Date{d};
    record.weather_code = static_cast<int>(rng.below(5));
    record.temp_low = round_to(rng.uniform(24.0, 28.0), 0.1);
    record.temp_high = round_to(record.temp_low + rng.uniform(3.0, 8.0), 0.1);
    table.emplace(record.date, record);
  }
  return table;
}

}  // namespace etafuse::synth

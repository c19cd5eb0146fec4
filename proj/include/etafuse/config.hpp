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

#ifndef ETAFUSE_CONFIG_HPP_
#define ETAFUSE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "etafuse/gbdt.hpp"
#include "etafuse/seqcnn/model.hpp"
#include "etafuse/skipgram.hpp"
#include "etafuse/synthgen.hpp"
#include "etafuse/trip_data.hpp"

namespace etafuse {

struct GbdtPreset {
  std::string id;
  gbdt::GbdtConfig config;
  bool operator==(const GbdtPreset&) const = default;
};

// Everything one pipeline run needs. Component seeds are derived from
// `seed`; they are not configurable on their own.
struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "run";
  std::filesystem::path trips_path;      // default: out_dir/trips.txt
  std::filesystem::path nextlinks_path;  // default: out_dir/nextlinks.txt
  std::filesystem::path weather_path;    // default: out_dir/weather.csv
  Date cutoff{std::chrono::year{2020}, std::chrono::month{8}, std::chrono::day{25}};
  synth::SynthConfig synth;
  features::SkipGramConfig skipgram;
  std::vector<seqcnn::ModelConfig> nn_variants;
  std::vector<GbdtPreset> gbdt_presets;
};

// The {9, 15, 20, 30} x {front, back} variant matrix over `base`.
std::vector<seqcnn::ModelConfig> default_nn_variants(const seqcnn::ModelConfig& base);
std::vector<GbdtPreset> default_gbdt_presets();

// Flat `key = value` lines; `#` starts a comment. Keys:
//   seed, out_dir, paths.{trips,nextlinks,weather}, split.cutoff,
//   synth.*, skipgram.*, nn.* (shared by all variants), nn.count,
//   nnK.{embed_dim,truncation,epochs,batch_size,learning_rate},
//   gbdt.count, gbdtK.{id,n_trees,learning_rate,max_depth,min_samples_leaf,
//   gamma,lambda,feature_subsample}.
// Unknown or repeated keys and bad values throw ParseError naming the line.
RunConfig parse_run_config(std::string_view text);

// Reads and parses `path` (IoError if unreadable), then applies the
// overrides and derives component seeds.
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::optional<std::filesystem::path>& out_override = {},
                          const std::optional<std::uint64_t>& seed_override = {});

// Fills default paths and derives every component seed from config.seed.
void finalize(RunConfig& config);

// Throws ValidationError on an invalid combination.
void validate(const RunConfig& config);

}  // namespace etafuse

#endif  // ETAFUSE_CONFIG_HPP_

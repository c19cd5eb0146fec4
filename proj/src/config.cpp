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

#include "etafuse/config.hpp"

#include <functional>
#include <map>
#include <set>

#include "etafuse/error.hpp"
#include "etafuse/rng.hpp"
#include "etafuse/text_io.hpp"

namespace etafuse {

namespace {

struct Entry {
  std::string value;
  std::size_t line = 0;
};

class Setter {
 public:
  Setter(const std::string& key, const Entry& entry) : key_(key), entry_(entry) {}

  double real() const {
    const auto v = try_parse_double(entry_.value);
    if (!v) fail("not a number");
    return *v;
  }
  std::int64_t integer() const {
    const auto v = try_parse_int(entry_.value);
    if (!v) fail("not an integer");
    return *v;
  }
  std::uint64_t unsigned_integer() const {
    const auto v = try_parse_uint(entry_.value);
    if (!v) fail("not a non-negative integer");
    return *v;
  }
  int small_int() const {
    const std::int64_t v = integer();
    if (v < -1'000'000'000 || v > 1'000'000'000) fail("out of range");
    return static_cast<int>(v);
  }
  std::size_t count() const {
    const std::int64_t v = integer();
    if (v < 0) fail("must be non-negative");
    return static_cast<std::size_t>(v);
  }
  bool boolean() const {
    if (entry_.value == "true" || entry_.value == "1") return true;
    if (entry_.value == "false" || entry_.value == "0") return false;
    fail("expected true or false");
  }
  Date date() const {
    try {
      return parse_date(entry_.value);
    } catch (const ValidationError& e) {
      fail(e.what());
    }
  }
  Truncation truncation() const {
    try {
      return parse_truncation(entry_.value);
    } catch (const ValidationError& e) {
      fail(e.what());
    }
  }
  std::vector<int> int_list() const {
    std::vector<int> out;
    for (const std::string_view part : split(entry_.value, ',')) {
      const auto v = try_parse_int(trim(part));
      if (!v || *v <= 0 || *v > 1'000'000) fail("expected a comma-separated list of widths");
      out.push_back(static_cast<int>(*v));
    }
    return out;
  }
  const std::string& text() const { return entry_.value; }

  [[noreturn]] void fail(const std::string& detail) const {
    throw ParseError(entry_.line, key_, detail);
  }

 private:
  const std::string& key_;
  const Entry& entry_;
};

using Handler = std::function<void(const Setter&)>;

// Splits `nn3.epochs` into (3, "epochs") for the given prefix.
std::optional<std::pair<std::size_t, std::string>> indexed_key(std::string_view key,
                                                               std::string_view prefix) {
  if (!key.starts_with(prefix)) return std::nullopt;
  key.remove_prefix(prefix.size());
  const std::size_t dot = key.find('.');
  if (dot == std::string_view::npos || dot == 0) return std::nullopt;
  const auto index = try_parse_int(key.substr(0, dot));
  if (!index || *index < 1 || key.substr(0, dot).front() == '+') return std::nullopt;
  return std::pair{static_cast<std::size_t>(*index), std::string(key.substr(dot + 1))};
}

std::map<std::string, Handler> nn_handlers(seqcnn::ModelConfig& c) {
  return {
      {"embed_dim", [&c](const Setter& s) { c.embed_dim = s.small_int(); }},
      {"truncation", [&c](const Setter& s) { c.truncation = s.truncation(); }},
      {"max_seq_len", [&c](const Setter& s) { c.max_seq_len = s.count(); }},
      {"cross_max_len", [&c](const Setter& s) { c.cross_max_len = s.count(); }},
      {"mlp_widths", [&c](const Setter& s) { c.mlp_widths = s.int_list(); }},
      {"head_width", [&c](const Setter& s) { c.head_width = s.small_int(); }},
      {"learning_rate", [&c](const Setter& s) { c.learning_rate = s.real(); }},
      {"batch_size", [&c](const Setter& s) { c.batch_size = s.count(); }},
      {"epochs", [&c](const Setter& s) { c.epochs = s.small_int(); }},
      {"output_scale", [&c](const Setter& s) { c.output_scale = s.real(); }},
  };
}

std::map<std::string, Handler> gbdt_handlers(GbdtPreset& p) {
  gbdt::GbdtConfig& c = p.config;
  return {
      {"id", [&p](const Setter& s) { p.id = s.text(); }},
      {"n_trees", [&c](const Setter& s) { c.n_trees = s.small_int(); }},
      {"learning_rate", [&c](const Setter& s) { c.learning_rate = s.real(); }},
      {"max_depth", [&c](const Setter& s) { c.max_depth = s.small_int(); }},
      {"min_samples_leaf", [&c](const Setter& s) { c.min_samples_leaf = s.count(); }},
      {"gamma", [&c](const Setter& s) { c.gamma = s.real(); }},
      {"lambda", [&c](const Setter& s) { c.lambda = s.real(); }},
      {"feature_subsample", [&c](const Setter& s) { c.feature_subsample = s.real(); }},
  };
}

bool is_token(const std::string& id) {
  if (id.empty()) return false;
  for (const char ch : id) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                    (ch >= '0' && ch <= '9') || ch == '_' || ch == '-';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

std::vector<seqcnn::ModelConfig> default_nn_variants(const seqcnn::ModelConfig& base) {
  std::vector<seqcnn::ModelConfig> out;
  for (const int d : {9, 15, 20, 30}) {
    for (const Truncation t : {Truncation::kFront, Truncation::kBack}) {
      seqcnn::ModelConfig c = base;
      c.embed_dim = d;
      c.truncation = t;
      out.push_back(c);
    }
  }
  return out;
}

std::vector<GbdtPreset> default_gbdt_presets() {
  GbdtPreset a{"gbdt_a", {}};
  GbdtPreset b{"gbdt_b", {}};
  b.config.max_depth = 5;
  b.config.min_samples_leaf = 40;
  b.config.feature_subsample = 0.6;
  return {a, b};
}

RunConfig parse_run_config(std::string_view text) {
  std::map<std::string, Entry> entries;
  std::size_t lineno = 0;
  for (const std::string_view raw : split(text, '\n')) {
    ++lineno;
    std::string_view line = raw;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(lineno, "config", "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError(lineno, "config", "empty key");
    if (value.empty()) throw ParseError(lineno, key, "empty value");
    if (entries.contains(key)) throw ParseError(lineno, key, "repeated key");
    entries.emplace(key, Entry{value, lineno});
  }

  RunConfig config;
  seqcnn::ModelConfig nn_base;
  std::size_t nn_count = 8;
  std::size_t gbdt_count = 2;
  synth::SynthConfig& sy = config.synth;
  features::SkipGramConfig& sg = config.skipgram;

  std::map<std::string, Handler> plain = {
      {"seed", [&](const Setter& s) { config.seed = s.unsigned_integer(); }},
      {"out_dir", [&](const Setter& s) { config.out_dir = s.text(); }},
      {"paths.trips", [&](const Setter& s) { config.trips_path = s.text(); }},
      {"paths.nextlinks", [&](const Setter& s) { config.nextlinks_path = s.text(); }},
      {"paths.weather", [&](const Setter& s) { config.weather_path = s.text(); }},
      {"split.cutoff", [&](const Setter& s) { config.cutoff = s.date(); }},
      {"synth.n_links", [&](const Setter& s) { sy.n_links = s.small_int(); }},
      {"synth.n_drivers", [&](const Setter& s) { sy.n_drivers = s.small_int(); }},
      {"synth.n_trips", [&](const Setter& s) { sy.n_trips = s.small_int(); }},
      {"synth.noise_sd", [&](const Setter& s) { sy.noise_sd = s.real(); }},
      {"synth.first_date", [&](const Setter& s) { sy.first_date = s.date(); }},
      {"synth.last_date", [&](const Setter& s) { sy.last_date = s.date(); }},
      {"synth.min_walk", [&](const Setter& s) { sy.min_walk = s.small_int(); }},
      {"synth.max_walk", [&](const Setter& s) { sy.max_walk = s.small_int(); }},
      {"synth.cross_probability", [&](const Setter& s) { sy.cross_probability = s.real(); }},
      {"synth.congestion", [&](const Setter& s) { sy.congestion = s.boolean(); }},
      {"synth.daily_profile", [&](const Setter& s) { sy.daily_profile = s.boolean(); }},
      {"skipgram.dim", [&](const Setter& s) { sg.dim = s.count(); }},
      {"skipgram.window", [&](const Setter& s) { sg.window = s.count(); }},
      {"skipgram.negatives", [&](const Setter& s) { sg.negatives = s.count(); }},
      {"skipgram.epochs", [&](const Setter& s) { sg.epochs = s.count(); }},
      {"skipgram.learning_rate", [&](const Setter& s) { sg.learning_rate = s.real(); }},
      {"nn.count", [&](const Setter& s) { nn_count = s.count(); }},
      {"gbdt.count", [&](const Setter& s) { gbdt_count = s.count(); }},
  };
  for (auto& [name, handler] : nn_handlers(nn_base)) {
    if (name != "embed_dim" && name != "truncation") plain.emplace("nn." + name, handler);
  }

  std::vector<std::pair<const std::string*, const Entry*>> nn_keys;
  std::vector<std::pair<const std::string*, const Entry*>> gbdt_keys;
  for (const auto& [key, entry] : entries) {
    if (const auto it = plain.find(key); it != plain.end()) {
      it->second(Setter(key, entry));
    } else if (indexed_key(key, "nn")) {
      nn_keys.emplace_back(&key, &entry);
    } else if (indexed_key(key, "gbdt")) {
      gbdt_keys.emplace_back(&key, &entry);
    } else {
      throw ParseError(entry.line, key, "unknown configuration key");
    }
  }

  config.nn_variants = default_nn_variants(nn_base);
  config.nn_variants.resize(nn_count, nn_base);
  for (const auto& [key, entry] : nn_keys) {
    const auto [index, field] = *indexed_key(*key, "nn");
    if (index > nn_count) throw ParseError(entry->line, *key, "variant index exceeds nn.count");
    auto handlers = nn_handlers(config.nn_variants[index - 1]);
    const auto it = handlers.find(field);
    if (it == handlers.end()) throw ParseError(entry->line, *key, "unknown configuration key");
    it->second(Setter(*key, *entry));
  }

  config.gbdt_presets = default_gbdt_presets();
  for (std::size_t i = config.gbdt_presets.size(); i < gbdt_count; ++i) {
    config.gbdt_presets.push_back({"gbdt_" + std::to_string(i + 1), {}});
  }
  config.gbdt_presets.resize(gbdt_count);
  for (const auto& [key, entry] : gbdt_keys) {
    const auto [index, field] = *indexed_key(*key, "gbdt");
    if (index > gbdt_count) throw ParseError(entry->line, *key, "preset index exceeds gbdt.count");
    auto handlers = gbdt_handlers(config.gbdt_presets[index - 1]);
    const auto it = handlers.find(field);
    if (it == handlers.end()) throw ParseError(entry->line, *key, "unknown configuration key");
    it->second(Setter(*key, *entry));
  }
  return config;
}

void finalize(RunConfig& config) {
  if (config.trips_path.empty()) config.trips_path = config.out_dir / "trips.txt";
  if (config.nextlinks_path.empty()) config.nextlinks_path = config.out_dir / "nextlinks.txt";
  if (config.weather_path.empty()) config.weather_path = config.out_dir / "weather.csv";
  config.synth.seed = derive_seed(config.seed, "synth");
  config.skipgram.seed = derive_seed(config.seed, "skipgram");
  for (seqcnn::ModelConfig& c : config.nn_variants) {
    c.seed = derive_seed(config.seed, "nn/" + seqcnn::variant_name(c));
  }
  for (GbdtPreset& p : config.gbdt_presets) {
    p.config.seed = derive_seed(config.seed, "gbdt/" + p.id);
  }
}

void validate(const RunConfig& config) {
  synth::validate(config.synth);
  if (config.nn_variants.empty()) throw ValidationError("config: no network variants");
  if (config.gbdt_presets.empty()) throw ValidationError("config: no gbdt presets");
  std::set<std::string> ids;
  for (const seqcnn::ModelConfig& c : config.nn_variants) {
    seqcnn::validate(c);
    if (!ids.insert(seqcnn::variant_name(c)).second) {
      throw ValidationError("config: duplicate network variant " + seqcnn::variant_name(c));
    }
  }
  for (const GbdtPreset& p : config.gbdt_presets) {
    gbdt::validate(p.config);
    if (!is_token(p.id)) {
      throw ValidationError("config: gbdt id '" + p.id + "' must be letters, digits, '_' or '-'");
    }
    if (!ids.insert(p.id).second) throw ValidationError("config: duplicate component id " + p.id);
  }
}

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::optional<std::filesystem::path>& out_override,
                          const std::optional<std::uint64_t>& seed_override) {
  const std::string text = read_file(path);
  RunConfig config;
  try {
    config = parse_run_config(text);
  } catch (const ParseError& e) {
    throw ValidationError("'" + path.string() + "': " + e.what());
  }
  if (out_override) config.out_dir = *out_override;
  if (seed_override) config.seed = *seed_override;
  finalize(config);
  validate(config);
  return config;
}

}  // namespace etafuse

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

// Batch front end: eta-fuse <subcommand> --config <path> [--out <dir>] [--seed <n>]
//
// Exit codes: 0 success, 1 invalid input or usage, 2 I/O failure.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "etafuse/config.hpp"
#include "etafuse/error.hpp"
#include "etafuse/pipeline.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Travel-time estimation pipeline: sequence CNNs and boosted trees, fused by a "
               "validation-weighted ensemble."};
  app.require_subcommand(1, 1);
  Flags flags;
  const std::array<const char*, etafuse::pipeline::kSubcommands.size()> about = {
      "Generate synthetic trips, road network and weather",
      "Split by date and write tree feature matrices",
      "Train every configured network variant",
      "Train every configured GBDT preset",
      "Fit ensemble weights on validation predictions",
      "Write ensemble predictions for validation trips",
      "Write the metrics table"};
  for (std::size_t i = 0; i < about.size(); ++i) {
    CLI::App* sub =
        app.add_subcommand(std::string(etafuse::pipeline::kSubcommands[i]), about[i]);
    sub->add_option("--config", flags.config, "Run configuration file")->required();
    sub->add_option("--out", flags.out, "Output directory (overrides out_dir)");
    sub->add_option("--seed", flags.seed, "Global seed (overrides seed)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string subcommand = app.get_subcommands().front()->get_name();
  try {
    std::optional<std::filesystem::path> out;
    if (flags.out) out = *flags.out;
    const etafuse::RunConfig config = etafuse::load_run_config(flags.config, out, flags.seed);
    etafuse::pipeline::run(subcommand, config, std::cerr);
  } catch (const etafuse::IoError& e) {
    std::cerr << "eta-fuse " << subcommand << ": " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "eta-fuse " << subcommand << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "eta-fuse " << subcommand << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}

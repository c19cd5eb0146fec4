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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>

#include "etafuse/config.hpp"
#include "etafuse/error.hpp"
#include "etafuse/pipeline.hpp"
#include "etafuse/rng.hpp"
#include "etafuse/text_io.hpp"
#include "../common/test_util.hpp"

using namespace etafuse;
namespace fs = std::filesystem;

namespace {

std::string parse_error_key(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ParseError& e) {
    return e.field();
  }
  return "";
}

struct CliResult {
  int code = -1;
  std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(ETA_FUSE_BIN) + " " + args + " >" +
                          (dir / "stdout.txt").string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = read_file(err);
  return r;
}

const char* kSmallConfig =
    "seed = 5\n"
    "synth.n_links = 80\n"
    "synth.n_drivers = 20\n"
    "synth.n_trips = 300\n"
    "synth.max_walk = 30\n"
    "skipgram.dim = 4\n"
    "skipgram.epochs = 1\n"
    "nn.count = 1\n"
    "nn.epochs = 1\n"
    "nn.batch_size = 32\n"
    "nn.mlp_widths = 16,8\n"
    "nn.head_width = 8\n"
    "gbdt.count = 1\n"
    "gbdt1.n_trees = 20\n"
    "gbdt1.min_samples_leaf = 5\n";

}  // namespace

TEST_CASE("config defaults") {
  const RunConfig c = parse_run_config("");
  CHECK(c.nn_variants.size() == 8);
  CHECK(c.gbdt_presets.size() == 2);
  CHECK(c.gbdt_presets[0].id == "gbdt_a");
  CHECK(c.gbdt_presets[1].id == "gbdt_b");
  CHECK(c.gbdt_presets[0].config == gbdt::GbdtConfig{});
  CHECK(c.gbdt_presets[1].config.max_depth == 5);
  std::set<std::string> names;
  for (const auto& v : c.nn_variants) names.insert(seqcnn::variant_name(v));
  CHECK(names.size() == 8);
  CHECK(seqcnn::variant_name(c.nn_variants[0]) == "nn_d9_front");
  CHECK(c.cutoff == etafuse::testing::ymd(2020, 8, 25));
}

TEST_CASE("config keys") {
  const RunConfig c = parse_run_config(
      "# comment\n"
      "seed = 18446744073709551615\n"
      "out_dir = /tmp/x   # trailing\n"
      "split.cutoff = 2020-08-20\n"
      "synth.n_trips = 123\n"
      "synth.congestion = false\n"
      "nn.epochs = 3\n"
      "nn.mlp_widths = 32, 16\n"
      "nn2.embed_dim = 20\n"
      "nn2.truncation = back\n"
      "gbdt2.n_trees = 7\n"
      "gbdt2.id = cat\n");
  CHECK(c.seed == 18446744073709551615ull);
  CHECK(c.out_dir == "/tmp/x");
  CHECK(c.cutoff == etafuse::testing::ymd(2020, 8, 20));
  CHECK(c.synth.n_trips == 123);
  CHECK_FALSE(c.synth.congestion);
  for (const auto& v : c.nn_variants) {
    CHECK(v.epochs == 3);
    CHECK(v.mlp_widths == std::vector<int>{32, 16});
  }
  CHECK(seqcnn::variant_name(c.nn_variants[1]) == "nn_d20_back");
  CHECK(c.gbdt_presets[1].id == "cat");
  CHECK(c.gbdt_presets[1].config.n_trees == 7);
}

TEST_CASE("config errors name the key and line") {
  CHECK(parse_error_key("seed = 1\nbogus = 2\n") == "bogus");
  CHECK(parse_error_key("seed = 1\nseed = 2\n") == "seed");
  CHECK(parse_error_key("seed = x\n") == "seed");
  CHECK(parse_error_key("nn9.embed_dim = 9\n") == "nn9.embed_dim");
  CHECK(parse_error_key("nn1.colour = 9\n") == "nn1.colour");
  CHECK(parse_error_key("nn1.truncation = middle\n") == "nn1.truncation");
  CHECK(parse_error_key("just words\n") == "config");
  try {
    parse_run_config("\n\nsplit.cutoff = 2020-13-01\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("seeds derive from the global seed") {
  RunConfig a = parse_run_config("seed = 4\nout_dir = r\n");
  finalize(a);
  RunConfig b = parse_run_config("seed = 4\nout_dir = r\n");
  finalize(b);
  CHECK(a.synth.seed == b.synth.seed);
  CHECK(a.synth.seed == derive_seed(4, "synth"));
  CHECK(a.nn_variants[0].seed != a.nn_variants[1].seed);
  CHECK(a.gbdt_presets[0].config.seed != a.gbdt_presets[1].config.seed);
  CHECK(a.trips_path == fs::path("r") / "trips.txt");
  RunConfig c = parse_run_config("seed = 5\n");
  finalize(c);
  CHECK(c.synth.seed != a.synth.seed);
}

TEST_CASE("config validation") {
  RunConfig c = parse_run_config("nn1.embed_dim = 15\n");
  finalize(c);
  // Variants 1 and 3 are now both nn_d15_front.
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = parse_run_config("gbdt1.id = a b\n");
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = parse_run_config("gbdt.count = 0\n");
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = parse_run_config("synth.n_links = 2\n");
  CHECK_THROWS_AS(validate(c), ValidationError);
}

TEST_CASE("unknown subcommand") {
  RunConfig c = parse_run_config("");
  std::ostringstream log;
  CHECK_THROWS_AS(pipeline::run("train-all", c, log), ValidationError);
}

TEST_CASE("cli exit codes") {
  const auto dir = etafuse::testing::scratch_dir("cli_codes");
  const auto cfg = dir / "c.cfg";
  write_file_atomic(cfg, std::string("out_dir = ") + (dir / "run").string() +
                             "\npaths.trips = " + (dir / "no_such_trips.txt").string() + "\n");
  CHECK(run_cli("", dir).code == 1);
  CHECK(run_cli("--help", dir).code == 0);
  CHECK(run_cli("synth --help", dir).code == 0);
  CHECK(run_cli("frobnicate --config " + cfg.string(), dir).code == 1);
  CHECK(run_cli("featurize", dir).code == 1);
  const auto unknown_flag = run_cli("synth --config " + cfg.string() + " --verbose", dir);
  CHECK(unknown_flag.code == 1);
  CHECK(unknown_flag.err.find("--verbose") != std::string::npos);

  const auto missing_cfg = run_cli("synth --config " + (dir / "absent.cfg").string(), dir);
  CHECK(missing_cfg.code == 2);
  CHECK(missing_cfg.err.find("absent.cfg") != std::string::npos);

  const auto bad = dir / "bad.cfg";
  write_file_atomic(bad, "seed = -4\n");
  const auto bad_run = run_cli("synth --config " + bad.string(), dir);
  CHECK(bad_run.code == 1);
  CHECK(bad_run.err.find("seed") != std::string::npos);

  const auto missing_trips = run_cli("featurize --config " + cfg.string(), dir);
  CHECK(missing_trips.code == 2);
  CHECK(missing_trips.err.find("no_such_trips.txt") != std::string::npos);
}

TEST_CASE("cli pipeline writes a metrics file with the baseline row") {
  const auto dir = etafuse::testing::scratch_dir("cli_pipeline");
  const auto cfg = dir / "c.cfg";
  write_file_atomic(cfg, kSmallConfig);
  const std::string flags = " --config " + cfg.string() + " --out " + (dir / "run").string();
  for (const char* sub : {"synth", "featurize", "train-gbdt", "evaluate"}) {
    CAPTURE(sub);
    const auto r = run_cli(std::string(sub) + flags, dir);
    CHECK(r.code == 0);
  }
  const pipeline::Artifacts art(dir / "run");
  REQUIRE(fs::exists(art.metrics()));
  const std::string metrics = read_file(art.metrics());
  CHECK(metrics.rfind("model,mape,mae\nsimple_eta,", 0) == 0);
  CHECK(metrics.find("\ngbdt_a,") != std::string::npos);
  CHECK(fs::exists(art.report()));

  // Rerunning evaluate reproduces the same bytes, and a different seed
  // produces different data.
  CHECK(run_cli("evaluate" + flags, dir).code == 0);
  CHECK(read_file(art.metrics()) == metrics);
  const std::string trips = read_file(dir / "run" / "trips.txt");
  CHECK(run_cli("synth --seed 6" + flags, dir).code == 0);
  CHECK(read_file(dir / "run" / "trips.txt") != trips);
  // The transfer network's validation predictions come from featurize.
  CHECK(run_cli("fit-ensemble" + flags, dir).code == 0);
  fs::remove(art.component_val("gbdt_a"));
  const auto missing = run_cli("fit-ensemble" + flags, dir);
  CHECK(missing.code == 2);
  CHECK(missing.err.find("gbdt_a.val.csv") != std::string::npos);
}

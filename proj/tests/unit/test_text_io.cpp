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
#include <filesystem>
#include <limits>
#include <sstream>

#include "etafuse/error.hpp"
#include "etafuse/rng.hpp"
#include "etafuse/text_io.hpp"
#include "../common/test_util.hpp"

using namespace etafuse;

TEST_CASE("format_double round-trips") {
  CHECK(format_double(30.0) == "30");
  CHECK(format_double(25.5) == "25.5");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-999.0) == "-999");
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const double x = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform(-8.0, 8.0));
    const auto back = try_parse_double(format_double(x));
    REQUIRE(back.has_value());
    CHECK(*back == x);
  }
}

TEST_CASE("strict numeric parsing") {
  CHECK(try_parse_double("1.5") == 1.5);
  CHECK_FALSE(try_parse_double("1.5x").has_value());
  CHECK_FALSE(try_parse_double("").has_value());
  CHECK(try_parse_int("-12") == -12);
  CHECK_FALSE(try_parse_int("12.0").has_value());
  CHECK(try_parse_uint("18446744073709551615") == std::numeric_limits<std::uint64_t>::max());
  CHECK_FALSE(try_parse_uint("-1").has_value());
}

TEST_CASE("split and trim") {
  const auto parts = split("a,,b", ',');
  REQUIRE(parts.size() == 3);
  CHECK(parts[1].empty());
  CHECK(trim("  x y \t") == "x y");
}

TEST_CASE("token reader") {
  std::istringstream in("head 1\n2.5 nan\n  -3 7\n");
  TokenReader r(in);
  r.expect("head");
  CHECK(r.count("n") == 1);
  CHECK(r.real("a") == 2.5);
  CHECK(std::isnan(r.real("b")));
  CHECK(r.line() == 2);
  CHECK(r.integer("c") == -3);
  CHECK(r.unsigned_integer("d") == 7);
  CHECK(r.at_end());
  try {
    r.word("missing");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.field() == "missing");
  }
}

TEST_CASE("atomic write replaces the file and read_file reports the path") {
  const auto dir = etafuse::testing::scratch_dir("text_io");
  const auto path = dir / "a.txt";
  write_file_atomic(path, "one");
  write_file_atomic(path, "two");
  CHECK(read_file(path) == "two");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++entries;
  CHECK(entries == 1);
  try {
    read_file(dir / "nope.txt");
    FAIL("expected an io error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("nope.txt") != std::string::npos);
  }
}

TEST_CASE("derived seeds differ by tag and are stable") {
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
  Rng r(5);
  for (int i = 0; i < 1000; ++i) CHECK(r.below(7) < 7);
}

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

#ifndef ETAFUSE_TEXT_IO_HPP_
#define ETAFUSE_TEXT_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace etafuse {

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

// Strict numeric parsing: the whole token must be consumed. Returns nullopt
// on any malformed input.
std::optional<double> try_parse_double(std::string_view token);
std::optional<std::int64_t> try_parse_int(std::string_view token);
std::optional<std::uint64_t> try_parse_uint(std::string_view token);

// Splits on a single delimiter character. Empty fields are kept.
std::vector<std::string_view> split(std::string_view text, char delimiter);

std::string_view trim(std::string_view text);

// Reads a whole file; throws IoError naming the path on failure.
std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partially written artifact. Throws IoError.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

// Whitespace-separated token reader over a whole stream. Tracks 1-based
// line numbers; malformed or missing tokens throw ParseError naming the
// field.
class TokenReader {
 public:
  explicit TokenReader(std::istream& in);

  std::string word(const char* field);
  // Throws unless the next token equals `keyword`.
  void expect(const char* keyword);
  // Accepts "nan" in addition to finite numbers.
  double real(const char* field);
  std::int64_t integer(const char* field);
  std::uint64_t unsigned_integer(const char* field);
  std::size_t count(const char* field);
  bool at_end();

  std::size_t line() const { return line_; }

 private:
  void skip_space();

  std::string text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

}  // namespace etafuse

#endif  // ETAFUSE_TEXT_IO_HPP_

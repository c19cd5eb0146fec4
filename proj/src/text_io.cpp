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

#include "etafuse/text_io.hpp"

#include <cctype>
#include <charconv>
#include <limits>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "etafuse/error.hpp"

namespace etafuse {

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

std::optional<double> try_parse_double(std::string_view token) {
  if (token.empty()) return std::nullopt;
  if (token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto result =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (result.ec != std::errc() || result.ptr != token.data() + token.size()) {
    return std::nullopt;
  }
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<std::int64_t> try_parse_int(std::string_view token) {
  if (token.empty()) return std::nullopt;
  std::int64_t value = 0;
  const auto result =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (result.ec != std::errc() || result.ptr != token.data() + token.size()) {
    return std::nullopt;
  }
  return value;
}

std::optional<std::uint64_t> try_parse_uint(std::string_view token) {
  if (token.empty() || token.front() == '-') return std::nullopt;
  std::uint64_t value = 0;
  const auto result =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (result.ec != std::errc() || result.ptr != token.data() + token.size()) {
    return std::nullopt;
  }
  return value;
}

std::vector<std::string_view> split(std::string_view text, char delimiter) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(delimiter, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      break;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

std::string_view trim(std::string_view text) {
  constexpr std::string_view kSpace = " \t\r\n";
  const auto first = text.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(kSpace);
  return text.substr(first, last - first + 1);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return buffer.str();
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot rename '" + tmp.string() + "' to '" +
                  path.string() + "': " + ec.message());
  }
}

TokenReader::TokenReader(std::istream& in) {
  std::ostringstream buffer;
  buffer << in.rdbuf();
  text_ = buffer.str();
}

void TokenReader::skip_space() {
  while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
    if (text_[pos_] == '\n') ++line_;
    ++pos_;
  }
}

bool TokenReader::at_end() {
  skip_space();
  return pos_ >= text_.size();
}

std::string TokenReader::word(const char* field) {
  skip_space();
  if (pos_ >= text_.size()) throw ParseError(line_, field, "unexpected end of file");
  const std::size_t start = pos_;
  while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  return text_.substr(start, pos_ - start);
}

void TokenReader::expect(const char* keyword) {
  const std::string token = word(keyword);
  if (token != keyword) {
    throw ParseError(line_, keyword,
                     "expected '" + std::string(keyword) + "', found '" + token + "'");
  }
}

double TokenReader::real(const char* field) {
  const std::string token = word(field);
  if (token == "nan") return std::numeric_limits<double>::quiet_NaN();
  const auto v = try_parse_double(token);
  if (!v) throw ParseError(line_, field, "not a number: '" + token + "'");
  return *v;
}

std::int64_t TokenReader::integer(const char* field) {
  const std::string token = word(field);
  const auto v = try_parse_int(token);
  if (!v) throw ParseError(line_, field, "not an integer: '" + token + "'");
  return *v;
}

std::uint64_t TokenReader::unsigned_integer(const char* field) {
  const std::string token = word(field);
  const auto v = try_parse_uint(token);
  if (!v) throw ParseError(line_, field, "not an unsigned integer: '" + token + "'");
  return *v;
}

std::size_t TokenReader::count(const char* field) {
  const std::int64_t v = integer(field);
  if (v < 0) throw ParseError(line_, field, "negative count");
  return static_cast<std::size_t>(v);
}

}  // namespace etafuse

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

#ifndef ETAFUSE_ERROR_HPP_
#define ETAFUSE_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace etafuse {

// Invalid input data, configuration, or model state. The CLI maps it to
// exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A malformed text record. Carries the 1-based line number and the name of
// the field that failed to parse.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, std::string field, const std::string& detail)
      : ValidationError("line " + std::to_string(line) + ": field '" + field +
                        "': " + detail),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

// A file could not be opened, read, or written. The CLI maps it to exit
// code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace etafuse

#endif  // ETAFUSE_ERROR_HPP_

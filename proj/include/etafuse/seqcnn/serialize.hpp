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

#ifndef ETAFUSE_SEQCNN_SERIALIZE_HPP_
#define ETAFUSE_SEQCNN_SERIALIZE_HPP_

#include <filesystem>
#include <istream>
#include <ostream>

#include "etafuse/seqcnn/model.hpp"

namespace etafuse::seqcnn {

inline constexpr int kModelFormatVersion = 1;

// Text container: a version line, the configuration, vocabularies,
// normalisers, training history, every parameter tensor and the optimizer
// moments. Values use the shortest round-trip decimal form, so a reloaded
// model predicts bit-identically.
void save_model(const SeqCnnModel& model, std::ostream& out);
void save_model(const SeqCnnModel& model, const std::filesystem::path& path);

// Throws ParseError on malformed or truncated input and ValidationError on
// a version mismatch.
SeqCnnModel load_model(std::istream& in);
SeqCnnModel load_model(const std::filesystem::path& path);

}  // namespace etafuse::seqcnn

#endif  // ETAFUSE_SEQCNN_SERIALIZE_HPP_

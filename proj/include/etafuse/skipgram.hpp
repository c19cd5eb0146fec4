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

#ifndef ETAFUSE_SKIPGRAM_HPP_
#define ETAFUSE_SKIPGRAM_HPP_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <unordered_map>
#include <vector>

#include "etafuse/trip_data.hpp"

namespace etafuse::features {

// Link-id word vectors. Unknown ids map to the all-zero vector.
class LinkEmbeddingTable {
 public:
  LinkEmbeddingTable() = default;
  LinkEmbeddingTable(std::size_t dim, std::vector<std::int64_t> ids,
                     std::vector<double> vectors);

  std::size_t dim() const { return dim_; }
  std::size_t vocabulary_size() const { return ids_.size(); }
  const std::vector<std::int64_t>& ids() const { return ids_; }
  bool contains(std::int64_t id) const { return index_.contains(id); }

  std::span<const double> lookup(std::int64_t id) const;

  bool operator==(const LinkEmbeddingTable& other) const {
    return dim_ == other.dim_ && ids_ == other.ids_ && vectors_ == other.vectors_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::int64_t> ids_;
  std::vector<double> vectors_;
  std::vector<double> zeros_;
  std::unordered_map<std::int64_t, std::size_t> index_;
};

struct SkipGramConfig {
  std::size_t dim = 16;
  std::size_t window = 3;
  std::size_t negatives = 5;
  std::size_t epochs = 2;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;
};

// Skip-gram with negative sampling over link-id sequences. Single-threaded
// and deterministic for a fixed seed. Throws ValidationError on an empty
// corpus or invalid hyper-parameters.
LinkEmbeddingTable train_skipgram(
    const std::vector<std::vector<std::int64_t>>& corpus,
    const SkipGramConfig& config);

std::vector<std::vector<std::int64_t>> link_corpus(std::span<const Trip> trips);

// Mean of the per-step link vectors; unknown links count as zeros.
std::vector<double> sequence_embedding_feature(const Trip& trip,
                                               const LinkEmbeddingTable& table);

void write_embedding_table(std::ostream& out, const LinkEmbeddingTable& table);
LinkEmbeddingTable read_embedding_table(std::istream& in);

}  // namespace etafuse::features

#endif  // ETAFUSE_SKIPGRAM_HPP_

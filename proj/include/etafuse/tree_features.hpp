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

#ifndef ETAFUSE_TREE_FEATURES_HPP_
#define ETAFUSE_TREE_FEATURES_HPP_

#include <span>
#include <vector>

#include "etafuse/features.hpp"
#include "etafuse/seqcnn/model.hpp"
#include "etafuse/skipgram.hpp"
#include "etafuse/trip_data.hpp"

namespace etafuse::features {

// The network whose embeddings feed the tree model must be the Front,
// embedding-size-9 variant.
inline constexpr int kTransferEmbedDim = 9;
inline constexpr Truncation kTransferTruncation = Truncation::kFront;
inline constexpr std::size_t kTransferParts = 6;

// Mean link embedding over the truncated sequence, mean cross embedding
// (zero without crosses), then the slice, driver, last-order and
// second-last-order embeddings. Throws ValidationError for an untrained
// model.
std::vector<double> nn_embedding_transfer(const Trip& trip,
                                          const CategoricalFeatures& categorical,
                                          const seqcnn::SeqCnnModel& model);

// Everything a tree feature row depends on. All of it must be built from
// training-period data only.
struct TreeFeatureContext {
  const RoadNetwork* network = nullptr;
  const DriverHistoryIndex* history = nullptr;
  const LinkEmbeddingTable* skipgram = nullptr;
  const seqcnn::SeqCnnModel* transfer_model = nullptr;
  const WeatherTable* weather = nullptr;
};

// Column order: statistical, time, topology, categorical tokens, weather,
// skip-gram mean, transferred embeddings.
FeatureSchema tree_feature_schema(const TreeFeatureContext& context);

struct FeatureRow {
  std::vector<double> values;
  FeatureSchema schema;
};

FeatureRow assemble_tree_features(const Trip& trip, const TreeFeatureContext& context);

// Rows for every trip; throws ValidationError if any row's schema differs
// from the first.
FeatureMatrix build_tree_features(std::span<const Trip> trips, const TreeFeatureContext& context);

}  // namespace etafuse::features

#endif  // ETAFUSE_TREE_FEATURES_HPP_

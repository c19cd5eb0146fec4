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

#ifndef ETAFUSE_SEQCNN_TRAIN_HPP_
#define ETAFUSE_SEQCNN_TRAIN_HPP_

#include <functional>
#include <span>
#include <vector>

#include "etafuse/features.hpp"
#include "etafuse/seqcnn/model.hpp"

namespace etafuse::seqcnn {

// A trip with its precomputed network side inputs. `trip` is the full,
// untruncated trip and must outlive the sample.
struct TrainingSample {
  const Trip* trip = nullptr;
  features::DenseFeatures dense;
  features::CategoricalFeatures categorical;
};

std::vector<TrainingSample> make_samples(std::span<const Trip> trips,
                                         const features::DriverHistoryIndex& history);

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Mini-batch Adam on the MAPE loss. Records epoch 0 (initial weights) and
// every completed epoch in model.history; val_mape is NaN without a
// validation set. Throws ValidationError on an empty training set or when
// the loss becomes non-finite.
void train(SeqCnnModel& model, std::span<const TrainingSample> training,
           std::span<const TrainingSample> validation, const EpochCallback& on_epoch = {});

std::vector<double> predict(const SeqCnnModel& model, std::span<const TrainingSample> samples);
double evaluate_mape(const SeqCnnModel& model, std::span<const TrainingSample> samples);

// Applies one Adam step from the accumulated gradients.
void adam_step(SeqCnnModel& model);

}  // namespace etafuse::seqcnn

#endif  // ETAFUSE_SEQCNN_TRAIN_HPP_

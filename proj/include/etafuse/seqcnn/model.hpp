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

#ifndef ETAFUSE_SEQCNN_MODEL_HPP_
#define ETAFUSE_SEQCNN_MODEL_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "etafuse/features.hpp"
#include "etafuse/seqcnn/layers.hpp"
#include "etafuse/trip_data.hpp"

namespace etafuse::seqcnn {

struct ModelConfig {
  int embed_dim = 9;
  Truncation truncation = Truncation::kFront;
  std::size_t max_seq_len = 200;
  std::size_t cross_max_len = 200;
  std::vector<int> mlp_widths{256, 64};
  int head_width = 32;
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  int epochs = 20;
  std::uint64_t seed = 1;
  // prediction = simple_eta * exp(output_scale * z).
  double output_scale = 0.25;

  bool operator==(const ModelConfig&) const = default;
};

void validate(const ModelConfig& config);

// Variant identifier such as "nn_d9_front".
std::string variant_name(const ModelConfig& config);

// Scale-only normalisation of the per-step scalars. Padding steps are all
// zero before and after scaling.
struct StepScale {
  double link_time = 1.0;
  double link_ratio = 1.0;
  double link_status = 1.0;
  double cross_time = 1.0;

  bool operator==(const StepScale&) const = default;
};

// (x - mean) / scale per column.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const std::vector<std::vector<double>>& rows, std::size_t width);
  RowVector apply(std::span<const double> x) const;
  bool operator==(const Standardizer&) const = default;
};

inline constexpr std::size_t kHeadScalars = 5;
inline constexpr int kLastOrderRows = kSlicesPerDay + 1;  // slices + missing

struct OptimizerState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::int64_t step = 0;
};

struct EpochMetrics {
  int epoch = 0;
  double train_mape = 0.0;
  double val_mape = 0.0;
  bool operator==(const EpochMetrics&) const = default;
};

// One sequence-CNN variant: embedding tables, the two-layer link
// convolution, the cross convolution, interaction MLP and head, plus the
// optimizer state and training history.
struct SeqCnnModel {
  ModelConfig config;
  bool trained = false;

  Vocabulary link_vocab;    // rows: 0 padding, 1 unknown, 2.. known
  Vocabulary cross_vocab;   // same layout as link_vocab
  Vocabulary driver_vocab;  // rows: 0 unknown, 1.. known
  StepScale step_scale;
  Standardizer dense_norm;  // over DenseFeatures::as_array()
  Standardizer head_norm;   // over head_scalars()

  EmbeddingTable link_embedding;
  EmbeddingTable cross_embedding;
  EmbeddingTable slice_embedding;
  EmbeddingTable driver_embedding;
  EmbeddingTable last_order_embedding;
  EmbeddingTable second_last_order_embedding;

  ConvBank link_conv1;  // stride 1 over embedded links
  ConvBank link_conv2;  // stride 2 over layer-1 maps
  ConvBank cross_conv;  // stride 1 over embedded crosses

  std::vector<DenseLayer> interaction;  // rectified
  DenseLayer head_hidden;               // rectified
  DenseLayer head_output;               // one scalar z

  OptimizerState optimizer;
  std::vector<EpochMetrics> history;

  // Builds vocabularies and normalisers from the training trips and draws
  // initial weights from config.seed.
  static SeqCnnModel initialize(const ModelConfig& config,
                                std::span<const Trip> training_trips);

  // Creates zero-valued layers sized from config and the vocabularies.
  void allocate();

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();

  Index interaction_input_width() const;
};

// Row i = embedding(link_i) ++ (time, ratio, status) scaled by `scale`.
Matrix embed_and_append(std::span<const LinkStep> links, const EmbeddingTable& table,
                        const Vocabulary& vocab, const StepScale& scale = {});

// Aggregated head inputs: link_time_sum, mean link_ratio, cross_time_sum,
// distance, simple_eta.
std::array<double, kHeadScalars> head_scalars(const TripHeader& header,
                                              std::span<const LinkStep> links,
                                              const features::DenseFeatures& dense);

// Embedding rows of the slice, driver, last-order and second-last-order
// tokens. Missing previous orders map to the last row of their tables.
std::array<std::size_t, 4> categorical_rows(const SeqCnnModel& model,
                                            const features::CategoricalFeatures& cats);

// Network input for one trip. The spans are the (already truncated) steps.
struct SampleView {
  const TripHeader* header = nullptr;
  std::span<const LinkStep> links;
  std::span<const CrossStep> crosses;
  const features::DenseFeatures* dense = nullptr;
  const features::CategoricalFeatures* categorical = nullptr;
};

// Applies the model's truncation to a full trip.
SampleView make_view(const SeqCnnModel& model, const Trip& trip,
                     const features::DenseFeatures& dense,
                     const features::CategoricalFeatures& categorical);

// Pads link/cross sequences with the zero padding token up to the given
// lengths; padded windows are masked out of max pooling.
struct ForwardOptions {
  std::size_t pad_links_to = 0;
  std::size_t pad_crosses_to = 0;
};

struct ForwardTrace {
  std::vector<std::size_t> link_rows;
  Matrix link_input;
  Index link_valid = 0;
  BankOutputs conv1;
  std::array<PoolOutput, kRegionSizes.size()> pool1;
  Matrix concat;
  Index concat_valid = 0;
  BankOutputs conv2;
  std::array<PoolOutput, kRegionSizes.size()> pool2;

  std::vector<std::size_t> cross_rows;
  Matrix cross_input;
  Index cross_valid = 0;
  BankOutputs cross;
  std::array<PoolOutput, kRegionSizes.size()> pool_cross;

  std::array<std::size_t, 4> categorical_rows{};
  RowVector interaction_input;
  std::vector<RowVector> interaction_pre;
  std::vector<RowVector> interaction_act;
  RowVector head_input;
  RowVector head_pre;
  RowVector head_act;
  double z = 0.0;
  double prediction = 0.0;
};

// Full forward pass. Fills `trace` for a later backward pass when non-null.
// Throws ValidationError naming the layer on a non-finite activation.
double forward(const SeqCnnModel& model, const SampleView& sample,
               ForwardTrace* trace = nullptr, const ForwardOptions& options = {});

// Convenience overload that truncates `trip` per the model configuration.
double forward(const SeqCnnModel& model, const Trip& trip,
               const features::DenseFeatures& dense,
               const features::CategoricalFeatures& categorical);

// Accumulates parameter gradients of d_prediction * prediction.
void backward(SeqCnnModel& model, const ForwardTrace& trace, double d_prediction);

// Width of the pooled convolution features entering the interaction MLP.
inline constexpr Index kConvFeatureWidth = 3 * kPooledWidth;  // 384

}  // namespace etafuse::seqcnn

#endif  // ETAFUSE_SEQCNN_MODEL_HPP_

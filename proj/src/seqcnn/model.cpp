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

#include "etafuse/seqcnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "etafuse/error.hpp"
#include "etafuse/rng.hpp"

namespace etafuse::seqcnn {

using features::CategoricalFeatures;
using features::DenseFeatures;

void validate(const ModelConfig& config) {
  if (config.embed_dim < 1) throw ValidationError("seqcnn: embed_dim must be positive");
  if (config.max_seq_len < 1) throw ValidationError("seqcnn: max_seq_len must be >= 1");
  if (config.cross_max_len < 1) throw ValidationError("seqcnn: cross_max_len must be >= 1");
  if (config.mlp_widths.empty()) throw ValidationError("seqcnn: mlp_widths must be non-empty");
  for (const int w : config.mlp_widths) {
    if (w < 1) throw ValidationError("seqcnn: mlp widths must be positive");
  }
  if (config.head_width < 1) throw ValidationError("seqcnn: head_width must be positive");
  if (!(config.learning_rate >= 0.0)) throw ValidationError("seqcnn: learning_rate must be >= 0");
  if (config.batch_size < 1) throw ValidationError("seqcnn: batch_size must be >= 1");
  if (config.epochs < 0) throw ValidationError("seqcnn: epochs must be >= 0");
  if (!(config.output_scale > 0.0)) throw ValidationError("seqcnn: output_scale must be > 0");
}

std::string variant_name(const ModelConfig& config) {
  return "nn_d" + std::to_string(config.embed_dim) + "_" +
         std::string(truncation_name(config.truncation));
}

Standardizer Standardizer::fit(const std::vector<std::vector<double>>& rows,
                               std::size_t width) {
  Standardizer s;
  s.mean.assign(width, 0.0);
  s.scale.assign(width, 1.0);
  if (rows.empty()) return s;
  const auto n = static_cast<double>(rows.size());
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < width; ++j) s.mean[j] += row[j];
  }
  for (double& m : s.mean) m /= n;
  std::vector<double> var(width, 0.0);
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < width; ++j) {
      const double d = row[j] - s.mean[j];
      var[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < width; ++j) {
    const double sd = std::sqrt(var[j] / n);
    s.scale[j] = sd > 1e-9 ? sd : 1.0;
  }
  return s;
}

RowVector Standardizer::apply(std::span<const double> x) const {
  RowVector out(static_cast<Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) {
    out(static_cast<Index>(j)) = (x[j] - mean[j]) / scale[j];
  }
  return out;
}

std::array<double, kHeadScalars> head_scalars(const TripHeader& header,
                                              std::span<const LinkStep> links,
                                              const DenseFeatures& dense) {
  double ratio_sum = 0.0;
  for (const LinkStep& step : links) ratio_sum += step.link_ratio;
  const double mean_ratio = links.empty() ? 0.0 : ratio_sum / static_cast<double>(links.size());
  return {dense.link_time_sum, mean_ratio, dense.cross_time_sum, header.distance,
          header.simple_eta};
}

namespace {

double root_mean_square(double sum_sq, double count) {
  if (count <= 0.0) return 1.0;
  const double rms = std::sqrt(sum_sq / count);
  return rms > 1e-9 ? rms : 1.0;
}

std::size_t last_order_row(int slice) {
  return slice >= 0 && slice < kSlicesPerDay ? static_cast<std::size_t>(slice)
                                             : static_cast<std::size_t>(kSlicesPerDay);
}

void require_finite(const Matrix& m, const std::string& layer) {
  if (!m.allFinite()) {
    throw ValidationError("seqcnn: non-finite activation in layer '" + layer + "'");
  }
}

void require_finite(const RowVector& v, const std::string& layer) {
  if (!v.allFinite()) {
    throw ValidationError("seqcnn: non-finite activation in layer '" + layer + "'");
  }
}

}  // namespace

std::array<std::size_t, 4> categorical_rows(const SeqCnnModel& model,
                                            const CategoricalFeatures& cats) {
  return {static_cast<std::size_t>(std::clamp(cats.slice_id, 0, kSlicesPerDay - 1)),
          model.driver_vocab.row(cats.driver_id), last_order_row(cats.last_order_slice),
          last_order_row(cats.second_last_order_slice)};
}

SeqCnnModel SeqCnnModel::initialize(const ModelConfig& config,
                                    std::span<const Trip> training_trips) {
  validate(config);
  SeqCnnModel m;
  m.config = config;

  std::set<std::int64_t> links, crosses, drivers;
  double link_time_sq = 0.0, link_steps = 0.0, cross_time_sq = 0.0, cross_steps = 0.0;
  std::vector<std::vector<double>> dense_rows, head_rows;
  dense_rows.reserve(training_trips.size());
  head_rows.reserve(training_trips.size());
  for (const Trip& trip : training_trips) {
    const auto kept_links = truncated_view(std::span(trip.links), config.max_seq_len, config.truncation);
    const auto kept_crosses =
        truncated_view(std::span(trip.crosses), config.cross_max_len, config.truncation);
    for (const LinkStep& s : kept_links) {
      links.insert(s.link_id);
      link_time_sq += s.link_time * s.link_time;
      link_steps += 1.0;
    }
    for (const CrossStep& s : kept_crosses) {
      crosses.insert(s.cross_id);
      cross_time_sq += s.cross_time * s.cross_time;
      cross_steps += 1.0;
    }
    drivers.insert(trip.header.driver_id);
    const DenseFeatures dense = features::nn_dense(trip);
    const auto d = dense.as_array();
    dense_rows.emplace_back(d.begin(), d.end());
    const auto h = head_scalars(trip.header, kept_links, dense);
    head_rows.emplace_back(h.begin(), h.end());
  }
  m.link_vocab = Vocabulary({links.begin(), links.end()}, 2, 1);
  m.cross_vocab = Vocabulary({crosses.begin(), crosses.end()}, 2, 1);
  m.driver_vocab = Vocabulary({drivers.begin(), drivers.end()}, 1, 0);
  m.step_scale.link_time = root_mean_square(link_time_sq, link_steps);
  m.step_scale.link_ratio = 1.0;
  m.step_scale.link_status = 3.0;
  m.step_scale.cross_time = root_mean_square(cross_time_sq, cross_steps);
  m.dense_norm = Standardizer::fit(dense_rows, DenseFeatures::kWidth);
  m.head_norm = Standardizer::fit(head_rows, kHeadScalars);

  m.allocate();

  Rng rng(config.seed);
  for (EmbeddingTable* table :
       {&m.link_embedding, &m.cross_embedding, &m.slice_embedding, &m.driver_embedding,
        &m.last_order_embedding, &m.second_last_order_embedding}) {
    table->init(rng, 0.1);
  }
  m.link_conv1.init(rng);
  m.link_conv2.init(rng);
  m.cross_conv.init(rng);
  for (DenseLayer& layer : m.interaction) layer.init(rng);
  m.head_hidden.init(rng);
  // A zero output layer starts every prediction at simple_eta.
  m.head_output.weight.value.setZero();
  m.head_output.bias.value.setZero();

  return m;
}

void SeqCnnModel::allocate() {
  const Index d = config.embed_dim;
  link_embedding = EmbeddingTable("link_embedding", static_cast<Index>(link_vocab.rows()), d, true);
  cross_embedding =
      EmbeddingTable("cross_embedding", static_cast<Index>(cross_vocab.rows()), d, true);
  slice_embedding = EmbeddingTable("slice_embedding", kSlicesPerDay, d, false);
  driver_embedding =
      EmbeddingTable("driver_embedding", static_cast<Index>(driver_vocab.rows()), d, false);
  last_order_embedding = EmbeddingTable("last_order_embedding", kLastOrderRows, d, false);
  second_last_order_embedding =
      EmbeddingTable("second_last_order_embedding", kLastOrderRows, d, false);

  link_conv1 = ConvBank("link_conv1", d + 3, 1);
  link_conv2 = ConvBank("link_conv2", kPooledWidth, 2);
  cross_conv = ConvBank("cross_conv", d + 1, 1);

  interaction.clear();
  Index width = interaction_input_width();
  for (std::size_t i = 0; i < config.mlp_widths.size(); ++i) {
    interaction.emplace_back("interaction" + std::to_string(i), width, config.mlp_widths[i]);
    width = config.mlp_widths[i];
  }
  head_hidden = DenseLayer("head_hidden", width + static_cast<Index>(kHeadScalars),
                           config.head_width);
  head_output = DenseLayer("head_output", config.head_width, 1);

  optimizer = OptimizerState{};
  for (const Tensor* p : parameters()) {
    optimizer.first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    optimizer.second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

std::vector<Tensor*> SeqCnnModel::parameters() {
  std::vector<Tensor*> out;
  for (EmbeddingTable* table :
       {&link_embedding, &cross_embedding, &slice_embedding, &driver_embedding,
        &last_order_embedding, &second_last_order_embedding}) {
    out.push_back(&table->weight);
  }
  for (ConvBank* bank : {&link_conv1, &link_conv2, &cross_conv}) {
    for (ConvLayer& layer : bank->layers) {
      out.push_back(&layer.weight);
      out.push_back(&layer.bias);
    }
  }
  for (DenseLayer& layer : interaction) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  for (DenseLayer* layer : {&head_hidden, &head_output}) {
    out.push_back(&layer->weight);
    out.push_back(&layer->bias);
  }
  return out;
}

std::vector<const Tensor*> SeqCnnModel::parameters() const {
  auto mutable_params = const_cast<SeqCnnModel*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

std::size_t SeqCnnModel::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* p : parameters()) n += p->size();
  return n;
}

void SeqCnnModel::zero_grad() {
  for (Tensor* p : parameters()) p->zero_grad();
}

Index SeqCnnModel::interaction_input_width() const {
  return kConvFeatureWidth + 4 * config.embed_dim + static_cast<Index>(DenseFeatures::kWidth);
}

Matrix embed_and_append(std::span<const LinkStep> links, const EmbeddingTable& table,
                        const Vocabulary& vocab, const StepScale& scale) {
  const Index d = table.dim();
  Matrix out(static_cast<Index>(links.size()), d + 3);
  std::vector<std::size_t> rows;
  rows.reserve(links.size());
  for (const LinkStep& step : links) rows.push_back(vocab.row(step.link_id));
  table.gather(rows, out, 0);
  for (std::size_t i = 0; i < links.size(); ++i) {
    const auto r = static_cast<Index>(i);
    out(r, d) = links[i].link_time / scale.link_time;
    out(r, d + 1) = links[i].link_ratio / scale.link_ratio;
    out(r, d + 2) = static_cast<double>(links[i].link_status) / scale.link_status;
  }
  return out;
}

SampleView make_view(const SeqCnnModel& model, const Trip& trip, const DenseFeatures& dense,
                     const CategoricalFeatures& categorical) {
  SampleView view;
  view.header = &trip.header;
  view.links = truncated_view(std::span(trip.links), model.config.max_seq_len,
                              model.config.truncation);
  view.crosses = truncated_view(std::span(trip.crosses), model.config.cross_max_len,
                                model.config.truncation);
  view.dense = &dense;
  view.categorical = &categorical;
  return view;
}

namespace {

void forward_bank(const ConvBank& bank, const Matrix& input, Index valid, BankOutputs& outs,
                  std::array<PoolOutput, kRegionSizes.size()>& pools, RowVector& features,
                  Index offset) {
  conv1d(bank, input, valid, outs);
  for (std::size_t i = 0; i < kRegionSizes.size(); ++i) {
    require_finite(outs[i].act, bank.layers[i].weight.name);
    pools[i] = global_max_pool(outs[i].act, outs[i].valid);
    features.segment(offset + static_cast<Index>(i) * kFiltersPerSize, kFiltersPerSize) =
        pools[i].values;
  }
}

// Sums the back-propagated pool gradients into per-region activation grads.
std::array<Matrix, kRegionSizes.size()> pool_backward(
    const BankOutputs& outs, const std::array<PoolOutput, kRegionSizes.size()>& pools,
    const RowVector& d_features, Index offset) {
  std::array<Matrix, kRegionSizes.size()> d_act;
  for (std::size_t i = 0; i < kRegionSizes.size(); ++i) {
    d_act[i] = Matrix::Zero(outs[i].act.rows(), outs[i].act.cols());
    global_max_pool_backward(pools[i], d_features, d_act[i],
                             offset + static_cast<Index>(i) * kFiltersPerSize);
  }
  return d_act;
}

}  // namespace

double forward(const SeqCnnModel& model, const SampleView& sample, ForwardTrace* trace,
               const ForwardOptions& options) {
  ForwardTrace local;
  ForwardTrace& t = trace != nullptr ? *trace : local;
  const Index d = model.config.embed_dim;
  const TripHeader& header = *sample.header;

  // Link path.
  const std::size_t n_links = std::max(sample.links.size(), options.pad_links_to);
  t.link_rows.assign(n_links, 0);
  for (std::size_t i = 0; i < sample.links.size(); ++i) {
    t.link_rows[i] = model.link_vocab.row(sample.links[i].link_id);
  }
  t.link_input = Matrix::Zero(static_cast<Index>(n_links), d + 3);
  model.link_embedding.gather(t.link_rows, t.link_input, 0);
  for (std::size_t i = 0; i < sample.links.size(); ++i) {
    const auto r = static_cast<Index>(i);
    const LinkStep& s = sample.links[i];
    t.link_input(r, d) = s.link_time / model.step_scale.link_time;
    t.link_input(r, d + 1) = s.link_ratio / model.step_scale.link_ratio;
    t.link_input(r, d + 2) = static_cast<double>(s.link_status) / model.step_scale.link_status;
  }
  t.link_valid = static_cast<Index>(sample.links.size());

  RowVector conv_features(kConvFeatureWidth);
  forward_bank(model.link_conv1, t.link_input, t.link_valid, t.conv1, t.pool1, conv_features, 0);

  Index concat_rows = t.conv1[0].act.rows();
  for (const ConvOutput& out : t.conv1) concat_rows = std::min(concat_rows, out.act.rows());
  t.concat.resize(concat_rows, kPooledWidth);
  for (std::size_t i = 0; i < kRegionSizes.size(); ++i) {
    t.concat.middleCols(static_cast<Index>(i) * kFiltersPerSize, kFiltersPerSize) =
        t.conv1[i].act.topRows(concat_rows);
  }
  t.concat_valid = t.conv1.back().valid;
  for (const ConvOutput& out : t.conv1) t.concat_valid = std::min(t.concat_valid, out.valid);
  // Positions computed over padding behave like the zero fill used for
  // short inputs.
  t.concat.bottomRows(concat_rows - t.concat_valid).setZero();
  forward_bank(model.link_conv2, t.concat, t.concat_valid, t.conv2, t.pool2, conv_features,
               kPooledWidth);

  // Cross path.
  const std::size_t n_crosses = std::max(sample.crosses.size(), options.pad_crosses_to);
  t.cross_rows.assign(n_crosses, 0);
  for (std::size_t i = 0; i < sample.crosses.size(); ++i) {
    t.cross_rows[i] = model.cross_vocab.row(sample.crosses[i].cross_id);
  }
  t.cross_input = Matrix::Zero(static_cast<Index>(n_crosses), d + 1);
  model.cross_embedding.gather(t.cross_rows, t.cross_input, 0);
  for (std::size_t i = 0; i < sample.crosses.size(); ++i) {
    t.cross_input(static_cast<Index>(i), d) =
        sample.crosses[i].cross_time / model.step_scale.cross_time;
  }
  t.cross_valid = static_cast<Index>(sample.crosses.size());
  forward_bank(model.cross_conv, t.cross_input, t.cross_valid, t.cross, t.pool_cross,
               conv_features, 2 * kPooledWidth);

  // Categorical embeddings and dense features.
  const CategoricalFeatures& cats = *sample.categorical;
  t.categorical_rows = categorical_rows(model, cats);
  t.interaction_input.resize(model.interaction_input_width());
  t.interaction_input.head(kConvFeatureWidth) = conv_features;
  const std::array<const EmbeddingTable*, 4> tables = {
      &model.slice_embedding, &model.driver_embedding, &model.last_order_embedding,
      &model.second_last_order_embedding};
  for (std::size_t k = 0; k < tables.size(); ++k) {
    t.interaction_input.segment(kConvFeatureWidth + static_cast<Index>(k) * d, d) =
        tables[k]->weight.value.row(static_cast<Index>(t.categorical_rows[k]));
  }
  const auto dense = sample.dense->as_array();
  t.interaction_input.tail(static_cast<Index>(features::DenseFeatures::kWidth)) =
      model.dense_norm.apply(dense);
  require_finite(t.interaction_input, "interaction_input");

  t.interaction_pre.clear();
  t.interaction_act.clear();
  const RowVector* x = &t.interaction_input;
  for (const DenseLayer& layer : model.interaction) {
    t.interaction_pre.push_back(layer.forward(*x));
    t.interaction_act.push_back(t.interaction_pre.back().cwiseMax(0.0));
    require_finite(t.interaction_act.back(), layer.weight.name);
    x = &t.interaction_act.back();
  }

  const auto scalars = head_scalars(header, sample.links, *sample.dense);
  t.head_input.resize(x->size() + static_cast<Index>(kHeadScalars));
  t.head_input.head(x->size()) = *x;
  t.head_input.tail(static_cast<Index>(kHeadScalars)) = model.head_norm.apply(scalars);
  t.head_pre = model.head_hidden.forward(t.head_input);
  t.head_act = t.head_pre.cwiseMax(0.0);
  require_finite(t.head_act, "head_hidden");
  t.z = model.head_output.forward(t.head_act)(0);
  t.prediction = header.simple_eta * std::exp(model.config.output_scale * t.z);
  if (!std::isfinite(t.prediction)) {
    throw ValidationError("seqcnn: non-finite activation in layer 'head_output'");
  }
  return t.prediction;
}

double forward(const SeqCnnModel& model, const Trip& trip, const DenseFeatures& dense,
               const CategoricalFeatures& categorical) {
  return forward(model, make_view(model, trip, dense, categorical));
}

void backward(SeqCnnModel& model, const ForwardTrace& t, double d_prediction) {
  const Index d = model.config.embed_dim;
  const double dz = d_prediction * t.prediction * model.config.output_scale;

  RowVector d_head_act = RowVector::Zero(t.head_act.size());
  model.head_output.backward(t.head_act, RowVector::Constant(1, dz), &d_head_act);
  const RowVector d_head_pre =
      d_head_act.cwiseProduct((t.head_pre.array() > 0.0).cast<double>().matrix());
  RowVector d_head_input = RowVector::Zero(t.head_input.size());
  model.head_hidden.backward(t.head_input, d_head_pre, &d_head_input);

  const Index mlp_out = t.head_input.size() - static_cast<Index>(kHeadScalars);
  RowVector d_act = d_head_input.head(mlp_out);
  for (std::size_t k = model.interaction.size(); k-- > 0;) {
    const RowVector d_pre =
        d_act.cwiseProduct((t.interaction_pre[k].array() > 0.0).cast<double>().matrix());
    const RowVector& input = k == 0 ? t.interaction_input : t.interaction_act[k - 1];
    RowVector d_input = RowVector::Zero(input.size());
    model.interaction[k].backward(input, d_pre, &d_input);
    d_act = std::move(d_input);
  }
  const RowVector& d_interaction = d_act;

  const std::array<EmbeddingTable*, 4> tables = {
      &model.slice_embedding, &model.driver_embedding, &model.last_order_embedding,
      &model.second_last_order_embedding};
  for (std::size_t k = 0; k < tables.size(); ++k) {
    tables[k]->weight.grad.row(static_cast<Index>(t.categorical_rows[k])) +=
        d_interaction.segment(kConvFeatureWidth + static_cast<Index>(k) * d, d);
  }

  // Cross path.
  {
    const auto d_maps = pool_backward(t.cross, t.pool_cross, d_interaction, 2 * kPooledWidth);
    Matrix d_input = Matrix::Zero(t.cross_input.rows(), t.cross_input.cols());
    for (std::size_t i = 0; i < kRegionSizes.size(); ++i) {
      model.cross_conv.layers[i].backward(t.cross_input, t.cross[i], d_maps[i], &d_input);
    }
    model.cross_embedding.scatter_grad(t.cross_rows, d_input, 0);
  }

  // Link path: layer 2 feeds back into the layer-1 maps before layer 1.
  auto d_maps1 = pool_backward(t.conv1, t.pool1, d_interaction, 0);
  {
    const auto d_maps2 = pool_backward(t.conv2, t.pool2, d_interaction, kPooledWidth);
    Matrix d_concat = Matrix::Zero(t.concat.rows(), t.concat.cols());
    for (std::size_t i = 0; i < kRegionSizes.size(); ++i) {
      model.link_conv2.layers[i].backward(t.concat, t.conv2[i], d_maps2[i], &d_concat);
    }
    for (std::size_t i = 0; i < kRegionSizes.size(); ++i) {
      d_maps1[i].topRows(t.concat_valid) +=
          d_concat.block(0, static_cast<Index>(i) * kFiltersPerSize, t.concat_valid,
                         kFiltersPerSize);
    }
  }
  Matrix d_link_input = Matrix::Zero(t.link_input.rows(), t.link_input.cols());
  for (std::size_t i = 0; i < kRegionSizes.size(); ++i) {
    model.link_conv1.layers[i].backward(t.link_input, t.conv1[i], d_maps1[i], &d_link_input);
  }
  model.link_embedding.scatter_grad(t.link_rows, d_link_input, 0);
}

}  // namespace etafuse::seqcnn

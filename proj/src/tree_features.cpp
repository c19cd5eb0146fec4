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

#include "etafuse/tree_features.hpp"

#include <string>

#include "etafuse/error.hpp"

namespace etafuse::features {

namespace {

void append_row(std::vector<double>& out, const seqcnn::Matrix& table, std::size_t row) {
  const auto r = table.row(static_cast<seqcnn::Index>(row));
  out.insert(out.end(), r.data(), r.data() + r.size());
}

void check_context(const TreeFeatureContext& context) {
  if (context.network == nullptr || context.history == nullptr || context.skipgram == nullptr ||
      context.transfer_model == nullptr || context.weather == nullptr) {
    throw ValidationError("tree features: incomplete feature context");
  }
  const seqcnn::ModelConfig& c = context.transfer_model->config;
  if (c.embed_dim != kTransferEmbedDim || c.truncation != kTransferTruncation) {
    throw ValidationError("tree features: embedding transfer requires the front-truncated, "
                          "embedding-size-9 network, got " +
                          seqcnn::variant_name(c));
  }
}

}  // namespace

std::vector<double> nn_embedding_transfer(const Trip& trip, const CategoricalFeatures& categorical,
                                          const seqcnn::SeqCnnModel& model) {
  if (!model.trained) throw ValidationError("embedding transfer: model is untrained");
  const auto d = static_cast<std::size_t>(model.config.embed_dim);
  std::vector<double> out;
  out.reserve(kTransferParts * d);

  const auto mean_rows = [&](const seqcnn::Matrix& table, const std::vector<std::size_t>& rows) {
    std::vector<double> mean(d, 0.0);
    for (const std::size_t r : rows) {
      for (std::size_t k = 0; k < d; ++k) {
        mean[k] += table(static_cast<seqcnn::Index>(r), static_cast<seqcnn::Index>(k));
      }
    }
    if (!rows.empty()) {
      for (double& m : mean) m /= static_cast<double>(rows.size());
    }
    out.insert(out.end(), mean.begin(), mean.end());
  };

  std::vector<std::size_t> rows;
  for (const LinkStep& s :
       truncated_view(std::span(trip.links), model.config.max_seq_len, model.config.truncation)) {
    rows.push_back(model.link_vocab.row(s.link_id));
  }
  mean_rows(model.link_embedding.weight.value, rows);
  rows.clear();
  for (const CrossStep& s : truncated_view(std::span(trip.crosses), model.config.cross_max_len,
                                           model.config.truncation)) {
    rows.push_back(model.cross_vocab.row(s.cross_id));
  }
  mean_rows(model.cross_embedding.weight.value, rows);

  const auto cat_rows = seqcnn::categorical_rows(model, categorical);
  append_row(out, model.slice_embedding.weight.value, cat_rows[0]);
  append_row(out, model.driver_embedding.weight.value, cat_rows[1]);
  append_row(out, model.last_order_embedding.weight.value, cat_rows[2]);
  append_row(out, model.second_last_order_embedding.weight.value, cat_rows[3]);
  return out;
}

FeatureSchema tree_feature_schema(const TreeFeatureContext& context) {
  check_context(context);
  FeatureSchema schema;
  for (const char* name : statistical_feature_names()) schema.add(name);
  schema.add("is_weekend");
  schema.add("hour");
  schema.add("is_rush");
  schema.add("day_bin");
  schema.add("upstream_sum");
  schema.add("downstream_sum");
  schema.add("driver_id", ColumnKind::kCategorical);
  schema.add("slice_id", ColumnKind::kCategorical);
  schema.add("last_order_slice", ColumnKind::kCategorical);
  schema.add("second_last_order_slice", ColumnKind::kCategorical);
  schema.add("weather_code", ColumnKind::kCategorical);
  schema.add("temp_low");
  schema.add("temp_high");
  for (std::size_t k = 0; k < context.skipgram->dim(); ++k) {
    schema.add("w2v_" + std::to_string(k));
  }
  const std::string prefix = seqcnn::variant_name(context.transfer_model->config) + ".";
  const auto d = static_cast<std::size_t>(context.transfer_model->config.embed_dim);
  for (const char* part : {"link", "cross", "slice", "driver", "last_order", "second_last_order"}) {
    for (std::size_t k = 0; k < d; ++k) {
      schema.add(prefix + part + "_" + std::to_string(k));
    }
  }
  schema.check_unique();
  return schema;
}

FeatureRow assemble_tree_features(const Trip& trip, const TreeFeatureContext& context) {
  FeatureRow row;
  row.schema = tree_feature_schema(context);
  std::vector<double>& v = row.values;
  v.reserve(row.schema.size());

  const auto stats = statistical_features(trip);
  v.insert(v.end(), stats.begin(), stats.end());

  const TimeFeatures time = time_features(trip.header);
  v.push_back(time.is_weekend);
  v.push_back(time.hour);
  v.push_back(time.is_rush);
  v.push_back(static_cast<double>(static_cast<int>(time.day_bin)));

  const TopologyFeatures topo = topology_features(trip, *context.network);
  v.push_back(topo.upstream_sum);
  v.push_back(topo.downstream_sum);

  const CategoricalFeatures cats = nn_categorical(trip, *context.history);
  v.push_back(static_cast<double>(cats.driver_id));
  v.push_back(cats.slice_id);
  v.push_back(cats.last_order_slice);
  v.push_back(cats.second_last_order_slice);

  const auto weather = context.weather->find(trip.header.date);
  if (weather == context.weather->end()) {
    v.insert(v.end(), {kMissing, kMissing, kMissing});
  } else {
    v.push_back(weather->second.weather_code);
    v.push_back(weather->second.temp_low);
    v.push_back(weather->second.temp_high);
  }

  const auto w2v = sequence_embedding_feature(trip, *context.skipgram);
  v.insert(v.end(), w2v.begin(), w2v.end());

  const auto transfer = nn_embedding_transfer(trip, cats, *context.transfer_model);
  v.insert(v.end(), transfer.begin(), transfer.end());

  if (v.size() != row.schema.size()) {
    throw ValidationError("tree features: row width " + std::to_string(v.size()) +
                          " does not match schema width " + std::to_string(row.schema.size()));
  }
  return row;
}

FeatureMatrix build_tree_features(std::span<const Trip> trips, const TreeFeatureContext& context) {
  FeatureMatrix matrix(tree_feature_schema(context));
  for (const Trip& trip : trips) {
    FeatureRow row = assemble_tree_features(trip, context);
    if (!(row.schema == matrix.schema())) {
      throw ValidationError("tree features: schema mismatch at trip '" + trip.header.order_id + "'");
    }
    matrix.append_row(row.values);
  }
  return matrix;
}

}  // namespace etafuse::features

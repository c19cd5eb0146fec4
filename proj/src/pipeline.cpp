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

#include "etafuse/pipeline.hpp"

#include <filesystem>
#include <sstream>
#include <unordered_map>

#include "etafuse/ensemble.hpp"
#include "etafuse/error.hpp"
#include "etafuse/features.hpp"
#include "etafuse/gbdt.hpp"
#include "etafuse/seqcnn/serialize.hpp"
#include "etafuse/seqcnn/train.hpp"
#include "etafuse/skipgram.hpp"
#include "etafuse/synthgen.hpp"
#include "etafuse/text_io.hpp"
#include "etafuse/tree_features.hpp"

namespace etafuse::pipeline {

namespace fs = std::filesystem;

namespace {

struct Labels {
  std::vector<std::string> order_ids;
  std::vector<double> ata;
  std::vector<double> simple_eta;
};

// Inputs shared by every stage after synth.
struct Dataset {
  RoadNetwork network;
  WeatherTable weather;
  DateSplit split;
  features::DriverHistoryIndex history;  // training trips only
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

template <typename Parser>
auto parse_file(const fs::path& path, Parser parse) {
  std::istringstream in(read_file(path));
  try {
    return parse(in);
  } catch (const ParseError& e) {
    throw ValidationError("'" + path.string() + "': " + e.what());
  }
}

template <typename Writer>
void write_text(const fs::path& path, Writer write) {
  std::ostringstream out;
  write(out);
  write_file_atomic(path, out.str());
}

Dataset load_dataset(const RunConfig& config) {
  Dataset d;
  const std::vector<Trip> trips =
      parse_file(config.trips_path, [](std::istream& in) { return parse_trips(in); });
  d.network = parse_file(config.nextlinks_path,
                         [](std::istream& in) { return parse_road_network(in); });
  d.weather = parse_file(config.weather_path, [](std::istream& in) { return parse_weather(in); });
  d.split = split_by_date(trips, config.cutoff);
  if (d.split.train.empty()) {
    throw ValidationError("no trips dated before the cutoff " + format_date(config.cutoff));
  }
  d.history = features::DriverHistoryIndex::build(d.split.train);
  return d;
}

Labels labels_of(std::span<const Trip> trips) {
  Labels l;
  for (const Trip& t : trips) {
    l.order_ids.push_back(t.header.order_id);
    l.ata.push_back(t.header.ata);
    l.simple_eta.push_back(t.header.simple_eta);
  }
  return l;
}

void write_labels(const fs::path& path, const Labels& l) {
  write_text(path, [&](std::ostream& out) {
    out << "order_id,ata,simple_eta\n";
    for (std::size_t i = 0; i < l.order_ids.size(); ++i) {
      out << l.order_ids[i] << ',' << format_double(l.ata[i]) << ','
          << format_double(l.simple_eta[i]) << '\n';
    }
  });
}

Labels read_labels(const fs::path& path) {
  return parse_file(path, [](std::istream& in) {
    Labels l;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string_view text = trim(line);
      if (text.empty() || (lineno == 1 && text == "order_id,ata,simple_eta")) continue;
      const auto f = split(text, ',');
      if (f.size() != 3) throw ParseError(lineno, "labels", "expected 3 fields");
      const auto ata = try_parse_double(f[1]);
      const auto eta = try_parse_double(f[2]);
      if (!ata || !(*ata > 0.0)) throw ParseError(lineno, "ata", "not a positive number");
      if (!eta || !(*eta > 0.0)) throw ParseError(lineno, "simple_eta", "not a positive number");
      l.order_ids.emplace_back(f[0]);
      l.ata.push_back(*ata);
      l.simple_eta.push_back(*eta);
    }
    return l;
  });
}

void write_component_predictions(const fs::path& path, std::span<const std::string> ids,
                                 std::span<const double> predictions) {
  write_text(path, [&](std::ostream& out) {
    ensemble::write_predictions(out, ids, predictions);
  });
}

// Predictions aligned with `labels`; throws if the file lists other orders.
std::vector<double> read_aligned_predictions(const fs::path& path, const Labels& labels) {
  const auto rows = parse_file(path, [](std::istream& in) { return ensemble::read_predictions(in); });
  if (rows.size() != labels.order_ids.size()) {
    throw ValidationError("'" + path.string() + "' has " + std::to_string(rows.size()) +
                          " predictions, expected " + std::to_string(labels.order_ids.size()));
  }
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].first != labels.order_ids[i]) {
      throw ValidationError("'" + path.string() + "': order '" + rows[i].first +
                            "' does not match the validation labels");
    }
    out[i] = rows[i].second;
  }
  return out;
}

const seqcnn::ModelConfig& transfer_variant(const RunConfig& config) {
  for (const seqcnn::ModelConfig& c : config.nn_variants) {
    if (c.embed_dim == features::kTransferEmbedDim &&
        c.truncation == features::kTransferTruncation) {
      return c;
    }
  }
  throw ValidationError("config: the front-truncated embedding-size-9 network variant is required "
                        "for embedding transfer");
}

bool reusable(const fs::path& path, const seqcnn::ModelConfig& config) {
  if (!fs::exists(path)) return false;
  try {
    const seqcnn::SeqCnnModel m = seqcnn::load_model(path);
    return m.trained && m.config == config;
  } catch (const ValidationError&) {
    return false;
  }
}

void write_nn_outputs(const Artifacts& a, const seqcnn::SeqCnnModel& model,
                      std::span<const Trip> validation,
                      std::span<const seqcnn::TrainingSample> val_samples) {
  const std::string id = seqcnn::variant_name(model.config);
  write_text(a.nn_metrics(id), [&](std::ostream& out) {
    out << "epoch,train_mape,val_mape\n";
    for (const seqcnn::EpochMetrics& m : model.history) {
      out << m.epoch << ',' << format_double(m.train_mape) << ','
          << (m.val_mape != m.val_mape ? std::string("nan") : format_double(m.val_mape)) << '\n';
    }
  });
  const Labels l = labels_of(validation);
  write_component_predictions(a.component_val(id), l.order_ids,
                              seqcnn::predict(model, val_samples));
}

// Trains one variant unless a matching trained model already exists.
seqcnn::SeqCnnModel train_variant(const seqcnn::ModelConfig& config, const Dataset& d,
                                  const Artifacts& a, std::ostream& log) {
  const std::string id = seqcnn::variant_name(config);
  const auto train_samples = seqcnn::make_samples(d.split.train, d.history);
  const auto val_samples = seqcnn::make_samples(d.split.validation, d.history);
  seqcnn::SeqCnnModel model;
  if (reusable(a.nn_model(id), config)) {
    log << "[train-nn] " << id << ": reusing " << a.nn_model(id).string() << '\n';
    model = seqcnn::load_model(a.nn_model(id));
  } else {
    model = seqcnn::SeqCnnModel::initialize(config, d.split.train);
    log << "[train-nn] " << id << ": " << model.parameter_count() << " parameters, "
        << train_samples.size() << " training trips\n";
    seqcnn::train(model, train_samples, val_samples, [&](const seqcnn::EpochMetrics& m) {
      log << "[train-nn] " << id << " epoch " << m.epoch << " train_mape "
          << format_double(m.train_mape) << " val_mape " << format_double(m.val_mape) << '\n';
    });
    seqcnn::save_model(model, a.nn_model(id));
  }
  write_nn_outputs(a, model, d.split.validation, val_samples);
  return model;
}

features::FeatureMatrix read_features(const fs::path& path) {
  return parse_file(path, [](std::istream& in) { return features::read_feature_matrix(in); });
}

gbdt::MatrixView view(const features::FeatureMatrix& m) {
  return gbdt::MatrixView(m.values(), m.rows(), m.cols());
}

struct Components {
  std::vector<std::string> tree_ids;
  ensemble::PredictionMatrix tree;
  std::vector<std::string> nn_ids;
  ensemble::PredictionMatrix nn;
};

// Validation predictions of every configured component; with `require_all`
// a missing file is an error, otherwise it is skipped.
Components collect_components(const RunConfig& config, const Artifacts& a, const Labels& labels,
                              bool require_all) {
  Components c;
  const auto take = [&](const std::string& id, std::vector<std::string>& ids,
                        ensemble::PredictionMatrix& rows) {
    const fs::path path = a.component_val(id);
    if (!require_all && !fs::exists(path)) return;
    rows.push_back(read_aligned_predictions(path, labels));
    ids.push_back(id);
  };
  for (const GbdtPreset& p : config.gbdt_presets) take(p.id, c.tree_ids, c.tree);
  for (const seqcnn::ModelConfig& v : config.nn_variants) {
    take(seqcnn::variant_name(v), c.nn_ids, c.nn);
  }
  return c;
}

}  // namespace

void synth(const RunConfig& config, std::ostream& log) {
  ensure_dir(config.out_dir);
  const RoadNetwork network = synth::generate_network(config.synth);
  const std::vector<Trip> trips = synth::generate_trips(network, config.synth);
  const WeatherTable weather = synth::generate_weather(config.synth);
  for (const fs::path& p : {config.trips_path, config.nextlinks_path, config.weather_path}) {
    if (p.has_parent_path()) ensure_dir(p.parent_path());
  }
  write_text(config.trips_path, [&](std::ostream& out) { write_trips(out, trips); });
  write_text(config.nextlinks_path,
             [&](std::ostream& out) { write_road_network(out, network); });
  write_text(config.weather_path, [&](std::ostream& out) { write_weather(out, weather); });
  log << "[synth] " << trips.size() << " trips over " << network.links().size() << " links\n";
}

void featurize(const RunConfig& config, std::ostream& log) {
  ensure_dir(config.out_dir);
  const Artifacts a(config.out_dir);
  const Dataset d = load_dataset(config);
  log << "[featurize] " << d.split.train.size() << " training, " << d.split.validation.size()
      << " validation trips\n";

  const features::LinkEmbeddingTable table =
      features::train_skipgram(features::link_corpus(d.split.train), config.skipgram);
  write_text(a.skipgram(), [&](std::ostream& out) { features::write_embedding_table(out, table); });

  const seqcnn::SeqCnnModel transfer = train_variant(transfer_variant(config), d, a, log);

  features::TreeFeatureContext context;
  context.network = &d.network;
  context.history = &d.history;
  context.skipgram = &table;
  context.transfer_model = &transfer;
  context.weather = &d.weather;
  const features::FeatureMatrix train = features::build_tree_features(d.split.train, context);
  const features::FeatureMatrix val = features::build_tree_features(d.split.validation, context);
  write_text(a.features_train(),
             [&](std::ostream& out) { features::write_feature_matrix(out, train); });
  write_text(a.features_val(), [&](std::ostream& out) { features::write_feature_matrix(out, val); });
  write_labels(a.labels_train(), labels_of(d.split.train));
  write_labels(a.labels_val(), labels_of(d.split.validation));
  log << "[featurize] " << train.cols() << " tree feature columns\n";
}

void train_nn(const RunConfig& config, std::ostream& log) {
  ensure_dir(config.out_dir);
  const Artifacts a(config.out_dir);
  const Dataset d = load_dataset(config);
  for (const seqcnn::ModelConfig& variant : config.nn_variants) {
    train_variant(variant, d, a, log);
  }
}

void train_gbdt(const RunConfig& config, std::ostream& log) {
  const Artifacts a(config.out_dir);
  const features::FeatureMatrix train = read_features(a.features_train());
  const features::FeatureMatrix val = read_features(a.features_val());
  const Labels train_labels = read_labels(a.labels_train());
  const Labels val_labels = read_labels(a.labels_val());
  if (train.rows() != train_labels.ata.size() || val.rows() != val_labels.ata.size()) {
    throw ValidationError("feature and label files disagree on the number of rows");
  }
  if (!(train.schema() == val.schema())) {
    throw ValidationError("training and validation feature schemas differ");
  }
  for (const GbdtPreset& preset : config.gbdt_presets) {
    log << "[train-gbdt] " << preset.id << ": " << preset.config.n_trees << " trees on "
        << train.rows() << " rows x " << train.cols() << " columns\n";
    const gbdt::GbdtModel model = gbdt::boost(view(train), train_labels.ata, preset.config);
    gbdt::save_model(model, a.gbdt_model(preset.id));
    write_text(a.gbdt_log(preset.id),
               [&](std::ostream& out) { gbdt::write_training_log(out, model); });
    const std::vector<double> pred = gbdt::predict(model, view(val));
    write_component_predictions(a.component_val(preset.id), val_labels.order_ids, pred);
    log << "[train-gbdt] " << preset.id << ": train MAE " << format_double(model.train_mae.back())
        << '\n';
  }
}

void fit_ensemble(const RunConfig& config, std::ostream& log) {
  const Artifacts a(config.out_dir);
  const Labels labels = read_labels(a.labels_val());
  if (labels.ata.empty()) throw ValidationError("fit-ensemble: the validation split is empty");
  Components c = collect_components(config, a, labels, /*require_all=*/true);
  const ensemble::EnsembleWeights w = ensemble::fit_ensemble(
      std::move(c.tree_ids), c.tree, std::move(c.nn_ids), c.nn, labels.ata);
  write_text(a.weights(), [&](std::ostream& out) { ensemble::write_weights(out, w); });
  log << "[fit-ensemble] alpha " << format_double(w.alpha) << '\n';
}

void predict(const RunConfig& config, std::ostream& log) {
  const Artifacts a(config.out_dir);
  const ensemble::EnsembleWeights w =
      parse_file(a.weights(), [](std::istream& in) { return ensemble::read_weights(in); });
  const Dataset d = load_dataset(config);
  const Labels labels = labels_of(d.split.validation);

  const features::FeatureMatrix x = read_features(a.features_val());
  if (x.rows() != labels.order_ids.size()) {
    throw ValidationError("validation features do not match the validation trips");
  }
  ensemble::PredictionMatrix tree;
  for (const std::string& id : w.tree_ids) {
    tree.push_back(gbdt::predict(gbdt::load_model(a.gbdt_model(id)), view(x)));
  }
  const auto samples = seqcnn::make_samples(d.split.validation, d.history);
  ensemble::PredictionMatrix nn;
  for (const std::string& id : w.nn_ids) {
    nn.push_back(seqcnn::predict(seqcnn::load_model(a.nn_model(id)), samples));
  }
  write_component_predictions(a.predictions(), labels.order_ids,
                              ensemble::apply_ensemble(w, tree, nn));
  log << "[predict] " << labels.order_ids.size() << " predictions\n";
}

void evaluate(const RunConfig& config, std::ostream& log) {
  const Artifacts a(config.out_dir);
  const Labels labels = read_labels(a.labels_val());
  if (labels.ata.empty()) throw ValidationError("evaluate: the validation split is empty");
  const Components c = collect_components(config, a, labels, /*require_all=*/false);
  std::optional<ensemble::EnsembleWeights> w;
  if (fs::exists(a.weights())) {
    w = parse_file(a.weights(), [](std::istream& in) { return ensemble::read_weights(in); });
  }
  const ensemble::Report report = ensemble::evaluate_report(
      labels.ata, labels.simple_eta, c.tree_ids, c.tree, c.nn_ids, c.nn, w ? &*w : nullptr);
  write_file_atomic(a.metrics(), ensemble::render_csv(report));
  const std::string table = ensemble::render_table(report);
  write_file_atomic(a.report(), table);
  log << table;
}

void run(std::string_view subcommand, const RunConfig& config, std::ostream& log) {
  if (subcommand == "synth") return synth(config, log);
  if (subcommand == "featurize") return featurize(config, log);
  if (subcommand == "train-nn") return train_nn(config, log);
  if (subcommand == "train-gbdt") return train_gbdt(config, log);
  if (subcommand == "fit-ensemble") return fit_ensemble(config, log);
  if (subcommand == "predict") return predict(config, log);
  if (subcommand == "evaluate") return evaluate(config, log);
  throw ValidationError("unknown subcommand '" + std::string(subcommand) + "'");
}

}  // namespace etafuse::pipeline

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

#ifndef ETAFUSE_PIPELINE_HPP_
#define ETAFUSE_PIPELINE_HPP_

#include <array>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>

#include "etafuse/config.hpp"

namespace etafuse::pipeline {

// File names inside the output directory.
struct Artifacts {
  std::filesystem::path dir;

  explicit Artifacts(std::filesystem::path out_dir) : dir(std::move(out_dir)) {}

  std::filesystem::path nn_model(const std::string& id) const { return dir / (id + ".model"); }
  std::filesystem::path nn_metrics(const std::string& id) const {
    return dir / (id + ".metrics.csv");
  }
  std::filesystem::path component_val(const std::string& id) const {
    return dir / (id + ".val.csv");
  }
  std::filesystem::path gbdt_model(const std::string& id) const { return dir / (id + ".model"); }
  std::filesystem::path gbdt_log(const std::string& id) const { return dir / (id + ".log.csv"); }
  std::filesystem::path features_train() const { return dir / "features_train.csv"; }
  std::filesystem::path features_val() const { return dir / "features_val.csv"; }
  std::filesystem::path labels_train() const { return dir / "labels_train.csv"; }
  std::filesystem::path labels_val() const { return dir / "labels_val.csv"; }
  std::filesystem::path skipgram() const { return dir / "skipgram.txt"; }
  std::filesystem::path weights() const { return dir / "ensemble.weights"; }
  std::filesystem::path predictions() const { return dir / "predictions.csv"; }
  std::filesystem::path metrics() const { return dir / "metrics.csv"; }
  std::filesystem::path report() const { return dir / "report.txt"; }
};

inline constexpr std::array<std::string_view, 7> kSubcommands = {
    "synth", "featurize", "train-nn", "train-gbdt", "fit-ensemble", "predict", "evaluate"};

// Writes the synthetic trips, road network and weather files.
void synth(const RunConfig& config, std::ostream& log);
// Splits by date, trains the skip-gram table and (if needed) the transfer
// network, and writes the tree feature matrices and label files.
void featurize(const RunConfig& config, std::ostream& log);
// Trains every configured network variant; a variant whose model file
// already holds a trained model with the same configuration is reused.
void train_nn(const RunConfig& config, std::ostream& log);
void train_gbdt(const RunConfig& config, std::ostream& log);
void fit_ensemble(const RunConfig& config, std::ostream& log);
// Ensemble predictions for the validation trips.
void predict(const RunConfig& config, std::ostream& log);
// Metrics for the baseline, every component with validation predictions,
// and the blends when a weights file exists.
void evaluate(const RunConfig& config, std::ostream& log);

// Dispatches by name; throws ValidationError for an unknown subcommand.
void run(std::string_view subcommand, const RunConfig& config, std::ostream& log);

}  // namespace etafuse::pipeline

#endif  // ETAFUSE_PIPELINE_HPP_

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

#ifndef ETAFUSE_ENSEMBLE_HPP_
#define ETAFUSE_ENSEMBLE_HPP_

#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace etafuse::ensemble {

// mean(|p - y| / y). Throws ValidationError on empty or unequal inputs or a
// non-positive target.
double mape(std::span<const double> targets, std::span<const double> predictions);
// mean(|p - y|).
double mae(std::span<const double> targets, std::span<const double> predictions);

// components x rows.
using PredictionMatrix = std::vector<std::vector<double>>;

enum class Group { kTree, kNn };

inline constexpr int kWeightGridPoints = 101;
inline constexpr int kMaxSweeps = 100;
inline constexpr double kSweepTolerance = 1e-7;

// Simplex weights minimising validation MAPE. Coordinate descent from the
// uniform point, each coordinate line-searched on a 101-point grid with the
// other weights rescaled proportionally; single-component vertices are
// also scored and win only when strictly better.
std::vector<double> fit_weights(const PredictionMatrix& predictions,
                                std::span<const double> targets, Group group);

// Pointwise sum of w_i * P_i. Throws ValidationError on mismatched sizes,
// negative weights, or weights that do not sum to 1 within 1e-9.
std::vector<double> combine(const PredictionMatrix& predictions, std::span<const double> weights);

// alpha * tree + (1 - alpha) * nn. The endpoints return one input verbatim.
std::vector<double> blend_pair(std::span<const double> tree, std::span<const double> nn,
                               double alpha);

struct EnsembleWeights {
  std::vector<std::string> tree_ids;
  std::vector<double> tree_weights;
  std::vector<std::string> nn_ids;
  std::vector<double> nn_weights;
  double alpha = 0.5;  // weight of the tree blend

  bool operator==(const EnsembleWeights&) const = default;
};

// Fits each group's weights, then alpha on a 101-point grid; among grid
// points with equal MAPE the one closest to 0.5 wins.
EnsembleWeights fit_ensemble(std::vector<std::string> tree_ids, const PredictionMatrix& tree,
                             std::vector<std::string> nn_ids, const PredictionMatrix& nn,
                             std::span<const double> targets);

// Final predictions for aligned component rows (same order as the ids).
std::vector<double> apply_ensemble(const EnsembleWeights& weights, const PredictionMatrix& tree,
                                   const PredictionMatrix& nn);

inline constexpr int kWeightsFormatVersion = 1;

void write_weights(std::ostream& out, const EnsembleWeights& weights);
EnsembleWeights read_weights(std::istream& in);

// `order_id,prediction` lines.
void write_predictions(std::ostream& out, std::span<const std::string> order_ids,
                       std::span<const double> predictions);
std::vector<std::pair<std::string, double>> read_predictions(std::istream& in);

struct MetricRow {
  std::string model;
  double mape = 0.0;
  double mae = 0.0;
  bool operator==(const MetricRow&) const = default;
};

struct Report {
  std::vector<MetricRow> rows;
};

// Baseline (simple_eta) row first, then each component. With weights, the
// two blends and the ensemble follow; the weights' ids must match the
// component ids.
Report evaluate_report(std::span<const double> targets, std::span<const double> simple_eta,
                       std::span<const std::string> tree_ids, const PredictionMatrix& tree,
                       std::span<const std::string> nn_ids, const PredictionMatrix& nn,
                       const EnsembleWeights* weights);

std::string render_table(const Report& report);
// `model,mape,mae` lines.
std::string render_csv(const Report& report);

}  // namespace etafuse::ensemble

#endif  // ETAFUSE_ENSEMBLE_HPP_

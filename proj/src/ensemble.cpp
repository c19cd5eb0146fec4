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

#include "etafuse/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "etafuse/error.hpp"
#include "etafuse/text_io.hpp"

namespace etafuse::ensemble {

namespace {

constexpr const char* kMagic = "eta-fuse-ensemble";
constexpr double kImprovement = 1e-12;

const char* group_name(Group g) { return g == Group::kTree ? "tree" : "nn"; }

void check_matrix(const PredictionMatrix& p, std::size_t n, const char* what) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].size() != n) {
      throw ValidationError(std::string(what) + ": component " + std::to_string(i) + " has " +
                            std::to_string(p[i].size()) + " predictions, expected " +
                            std::to_string(n));
    }
  }
}

// combine() without validation of the weights.
std::vector<double> weighted_sum(const PredictionMatrix& p, std::span<const double> w) {
  std::vector<double> out(p.front().size(), 0.0);
  for (std::size_t c = 0; c < p.size(); ++c) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[c] * p[c][i];
  }
  return out;
}

double blend_mape(const PredictionMatrix& p, std::span<const double> w,
                  std::span<const double> targets) {
  return mape(targets, weighted_sum(p, w));
}

void normalize(std::vector<double>& w) {
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= sum;
}

// Moves weight i to t and rescales the others to share 1 - t.
std::vector<double> with_coordinate(const std::vector<double>& w, std::size_t i, double t) {
  std::vector<double> out(w.size());
  double rest = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (j != i) rest += w[j];
  }
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (j == i) {
      out[j] = t;
    } else if (rest > 0.0) {
      out[j] = w[j] * (1.0 - t) / rest;
    } else {
      out[j] = (1.0 - t) / static_cast<double>(w.size() - 1);
    }
  }
  return out;
}

}  // namespace

double mape(std::span<const double> targets, std::span<const double> predictions) {
  if (targets.size() != predictions.size()) {
    throw ValidationError("mape: " + std::to_string(targets.size()) + " targets but " +
                          std::to_string(predictions.size()) + " predictions");
  }
  if (targets.empty()) throw ValidationError("mape: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!(targets[i] > 0.0)) {
      throw ValidationError("mape: target " + std::to_string(i) + " is not positive");
    }
    sum += std::abs(predictions[i] - targets[i]) / targets[i];
  }
  return sum / static_cast<double>(targets.size());
}

double mae(std::span<const double> targets, std::span<const double> predictions) {
  if (targets.size() != predictions.size()) {
    throw ValidationError("mae: " + std::to_string(targets.size()) + " targets but " +
                          std::to_string(predictions.size()) + " predictions");
  }
  if (targets.empty()) throw ValidationError("mae: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) sum += std::abs(predictions[i] - targets[i]);
  return sum / static_cast<double>(targets.size());
}

std::vector<double> fit_weights(const PredictionMatrix& predictions,
                                std::span<const double> targets, Group group) {
  if (predictions.empty()) {
    throw ValidationError(std::string("fit_weights: no ") + group_name(group) + " components");
  }
  check_matrix(predictions, targets.size(), "fit_weights");
  const std::size_t k = predictions.size();
  if (k == 1) return {1.0};

  std::vector<double> w(k, 1.0 / static_cast<double>(k));
  double current = blend_mape(predictions, w, targets);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const double start = current;
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<double> best_w;
      double best = current;
      for (int g = 0; g < kWeightGridPoints; ++g) {
        const double t = static_cast<double>(g) / (kWeightGridPoints - 1);
        std::vector<double> candidate = with_coordinate(w, i, t);
        const double m = blend_mape(predictions, candidate, targets);
        if (m < best - kImprovement) {
          best = m;
          best_w = std::move(candidate);
        }
      }
      if (!best_w.empty()) {
        w = std::move(best_w);
        current = best;
      }
    }
    if (start - current < kSweepTolerance) break;
  }
  normalize(w);
  current = blend_mape(predictions, w, targets);

  for (std::size_t i = 0; i < k; ++i) {
    const double m = mape(targets, predictions[i]);
    if (m < current) {
      current = m;
      w.assign(k, 0.0);
      w[i] = 1.0;
    }
  }
  return w;
}

std::vector<double> combine(const PredictionMatrix& predictions, std::span<const double> weights) {
  if (predictions.empty()) throw ValidationError("combine: no components");
  if (weights.size() != predictions.size()) {
    throw ValidationError("combine: " + std::to_string(weights.size()) + " weights for " +
                          std::to_string(predictions.size()) + " components");
  }
  check_matrix(predictions, predictions.front().size(), "combine");
  double sum = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("combine: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("combine: weights sum to " + format_double(sum) + ", expected 1");
  }
  return weighted_sum(predictions, weights);
}

std::vector<double> blend_pair(std::span<const double> tree, std::span<const double> nn,
                               double alpha) {
  if (tree.size() != nn.size()) throw ValidationError("blend: tree and nn lengths differ");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("blend: alpha outside [0, 1]");
  std::vector<double> out(tree.size());
  if (alpha == 1.0) return {tree.begin(), tree.end()};
  if (alpha == 0.0) return {nn.begin(), nn.end()};
  // Written as an offset from nn so equal inputs blend to themselves exactly.
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = nn[i] + alpha * (tree[i] - nn[i]);
  return out;
}

EnsembleWeights fit_ensemble(std::vector<std::string> tree_ids, const PredictionMatrix& tree,
                             std::vector<std::string> nn_ids, const PredictionMatrix& nn,
                             std::span<const double> targets) {
  if (tree_ids.size() != tree.size() || nn_ids.size() != nn.size()) {
    throw ValidationError("fit_ensemble: component ids do not match prediction rows");
  }
  EnsembleWeights result;
  result.tree_ids = std::move(tree_ids);
  result.nn_ids = std::move(nn_ids);
  result.tree_weights = fit_weights(tree, targets, Group::kTree);
  result.nn_weights = fit_weights(nn, targets, Group::kNn);
  const std::vector<double> tree_blend = combine(tree, result.tree_weights);
  const std::vector<double> nn_blend = combine(nn, result.nn_weights);

  double best = 0.0;
  bool have = false;
  for (int g = 0; g < kWeightGridPoints; ++g) {
    const double alpha = static_cast<double>(g) / (kWeightGridPoints - 1);
    const double m = mape(targets, blend_pair(tree_blend, nn_blend, alpha));
    const bool closer = std::abs(alpha - 0.5) < std::abs(result.alpha - 0.5);
    if (!have || m < best || (m == best && closer)) {
      best = m;
      result.alpha = alpha;
      have = true;
    }
  }
  return result;
}

std::vector<double> apply_ensemble(const EnsembleWeights& weights, const PredictionMatrix& tree,
                                   const PredictionMatrix& nn) {
  return blend_pair(combine(tree, weights.tree_weights), combine(nn, weights.nn_weights),
                    weights.alpha);
}

void write_weights(std::ostream& out, const EnsembleWeights& w) {
  out << kMagic << ' ' << kWeightsFormatVersion << '\n';
  out << "tree " << w.tree_ids.size() << '\n';
  for (std::size_t i = 0; i < w.tree_ids.size(); ++i) {
    out << w.tree_ids[i] << ' ' << format_double(w.tree_weights[i]) << '\n';
  }
  out << "nn " << w.nn_ids.size() << '\n';
  for (std::size_t i = 0; i < w.nn_ids.size(); ++i) {
    out << w.nn_ids[i] << ' ' << format_double(w.nn_weights[i]) << '\n';
  }
  out << "alpha " << format_double(w.alpha) << '\n';
  out << "end\n";
}

EnsembleWeights read_weights(std::istream& in) {
  TokenReader r(in);
  if (r.word("magic") != kMagic) throw ParseError(r.line(), "magic", "not an ensemble weights file");
  const std::int64_t version = r.integer("version");
  if (version != kWeightsFormatVersion) {
    throw ValidationError("ensemble weights version " + std::to_string(version) +
                          " is not supported (expected " +
                          std::to_string(kWeightsFormatVersion) + ")");
  }
  EnsembleWeights w;
  const auto group = [&](const char* name, std::vector<std::string>& ids,
                         std::vector<double>& weights) {
    r.expect(name);
    const std::size_t n = r.count(name);
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back(r.word("component"));
      const double v = r.real("weight");
      if (!(v >= 0.0 && v <= 1.0)) throw ParseError(r.line(), "weight", "outside [0, 1]");
      weights.push_back(v);
    }
  };
  group("tree", w.tree_ids, w.tree_weights);
  group("nn", w.nn_ids, w.nn_weights);
  r.expect("alpha");
  w.alpha = r.real("alpha");
  if (!(w.alpha >= 0.0 && w.alpha <= 1.0)) throw ParseError(r.line(), "alpha", "outside [0, 1]");
  r.expect("end");
  return w;
}

void write_predictions(std::ostream& out, std::span<const std::string> order_ids,
                       std::span<const double> predictions) {
  if (order_ids.size() != predictions.size()) {
    throw ValidationError("predictions: id and value counts differ");
  }
  out << "order_id,prediction\n";
  for (std::size_t i = 0; i < order_ids.size(); ++i) {
    out << order_ids[i] << ',' << format_double(predictions[i]) << '\n';
  }
}

std::vector<std::pair<std::string, double>> read_predictions(std::istream& in) {
  std::vector<std::pair<std::string, double>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    if (lineno == 1 && text == "order_id,prediction") continue;
    const auto fields = split(text, ',');
    if (fields.size() != 2) throw ParseError(lineno, "prediction", "expected 2 fields");
    const auto v = try_parse_double(fields[1]);
    if (!v) throw ParseError(lineno, "prediction", "not a number");
    out.emplace_back(std::string(fields[0]), *v);
  }
  return out;
}

Report evaluate_report(std::span<const double> targets, std::span<const double> simple_eta,
                       std::span<const std::string> tree_ids, const PredictionMatrix& tree,
                       std::span<const std::string> nn_ids, const PredictionMatrix& nn,
                       const EnsembleWeights* weights) {
  if (tree_ids.size() != tree.size() || nn_ids.size() != nn.size()) {
    throw ValidationError("report: component ids do not match prediction rows");
  }
  Report report;
  const auto add = [&](const std::string& name, std::span<const double> p) {
    report.rows.push_back({name, mape(targets, p), mae(targets, p)});
  };
  add("simple_eta", simple_eta);
  for (std::size_t i = 0; i < tree.size(); ++i) add(tree_ids[i], tree[i]);
  for (std::size_t i = 0; i < nn.size(); ++i) add(nn_ids[i], nn[i]);
  if (weights == nullptr) return report;
  if (!std::equal(tree_ids.begin(), tree_ids.end(), weights->tree_ids.begin(),
                  weights->tree_ids.end()) ||
      !std::equal(nn_ids.begin(), nn_ids.end(), weights->nn_ids.begin(), weights->nn_ids.end())) {
    throw ValidationError("report: components differ from those in the weights file");
  }
  const std::vector<double> tree_blend = combine(tree, weights->tree_weights);
  const std::vector<double> nn_blend = combine(nn, weights->nn_weights);
  add("tree_blend", tree_blend);
  add("nn_blend", nn_blend);
  add("ensemble", blend_pair(tree_blend, nn_blend, weights->alpha));
  return report;
}

std::string render_table(const Report& report) {
  std::size_t width = 5;
  for (const MetricRow& row : report.rows) width = std::max(width, row.model.size());
  std::ostringstream out;
  char buffer[256];
  std::snprintf(buffer, sizeof(buffer), "%-*s  %10s  %12s\n", static_cast<int>(width), "model",
                "MAPE", "MAE");
  out << buffer;
  for (const MetricRow& row : report.rows) {
    std::snprintf(buffer, sizeof(buffer), "%-*s  %10.6f  %12.4f\n", static_cast<int>(width),
                  row.model.c_str(), row.mape, row.mae);
    out << buffer;
  }
  return out.str();
}

std::string render_csv(const Report& report) {
  std::ostringstream out;
  out << "model,mape,mae\n";
  for (const MetricRow& row : report.rows) {
    out << row.model << ',' << format_double(row.mape) << ',' << format_double(row.mae) << '\n';
  }
  return out.str();
}

}  // namespace etafuse::ensemble

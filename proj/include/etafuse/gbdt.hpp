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

#ifndef ETAFUSE_GBDT_HPP_
#define ETAFUSE_GBDT_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace etafuse::gbdt {

// Feature values equal to this sentinel are treated as missing.
inline constexpr double kMissing = -999.0;

inline bool is_missing(double x) { return x == kMissing || x != x; }

struct GbdtConfig {
  int n_trees = 300;
  double learning_rate = 0.1;
  int max_depth = 7;
  std::size_t min_samples_leaf = 20;
  double gamma = 0.0;   // per-split penalty
  double lambda = 1.0;  // leaf values are shrunk by 1 / (1 + lambda)
  double feature_subsample = 0.8;
  std::uint64_t seed = 1;

  bool operator==(const GbdtConfig&) const = default;
};

void validate(const GbdtConfig& config);

// Non-owning row-major view of a feature matrix.
struct MatrixView {
  std::span<const double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;

  MatrixView() = default;
  MatrixView(std::span<const double> v, std::size_t r, std::size_t c);

  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  std::span<const double> row(std::size_t i) const { return values.subspan(i * cols, cols); }
};

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  bool missing_left = true;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

// Node 0 is the root. `x <= threshold` goes left; missing values follow
// `missing_left`.
struct RegressionTree {
  std::vector<TreeNode> nodes;
  int depth = 0;

  std::size_t leaf_index(std::span<const double> row) const;
  double predict(std::span<const double> row) const { return nodes[leaf_index(row)].value; }
  std::size_t leaf_count() const;
  bool operator==(const RegressionTree&) const = default;
};

struct SplitCandidate {
  double threshold = 0.0;
  double gain = 0.0;
  bool missing_left = true;
  std::size_t left_count = 0;
  std::size_t right_count = 0;
};

// Sum of absolute deviations from the median.
double l1_impurity(std::span<const double> residuals);

// L1-optimal constant: the middle value for odd counts; for even counts the
// midpoint of the two middle values, or 0 when 0 lies between them (every
// point of that interval minimises the absolute loss).
double median(std::span<const double> values);

// Best threshold on one column by L1 impurity reduction minus gamma. Returns
// nullopt with fewer than 2 * min_samples_leaf samples, no distinct midpoint,
// or a non-positive best gain.
std::optional<SplitCandidate> best_split(std::span<const double> column,
                                         std::span<const double> residuals,
                                         const GbdtConfig& config);

// Depth-first greedy growth over the given features (all when empty). Leaf
// value = median residual / (1 + lambda). Throws ValidationError on an empty
// dataset.
RegressionTree fit_tree(const MatrixView& x, std::span<const double> residuals,
                        const GbdtConfig& config, std::span<const std::size_t> features = {});

struct GbdtModel {
  GbdtConfig config;
  std::size_t n_features = 0;
  double base_score = 0.0;
  std::vector<RegressionTree> trees;
  // train_mae[k] is the training MAE after k trees.
  std::vector<double> train_mae;

  bool operator==(const GbdtModel&) const = default;
};

// Throws ValidationError when rows < 2 * min_samples_leaf or the label count
// differs from the row count.
GbdtModel boost(const MatrixView& x, std::span<const double> y, const GbdtConfig& config);

// base_score + learning_rate * sum of tree outputs. Throws ValidationError
// naming expected and actual widths on mismatch.
std::vector<double> predict(const GbdtModel& model, const MatrixView& x);
double predict_row(const GbdtModel& model, std::span<const double> row);

// `iteration,train_mae` lines.
void write_training_log(std::ostream& out, const GbdtModel& model);

inline constexpr int kModelFormatVersion = 1;

void save_model(const GbdtModel& model, std::ostream& out);
void save_model(const GbdtModel& model, const std::filesystem::path& path);
// Throws ParseError on malformed content and ValidationError on a version
// mismatch.
GbdtModel load_model(std::istream& in);
GbdtModel load_model(const std::filesystem::path& path);

}  // namespace etafuse::gbdt

#endif  // ETAFUSE_GBDT_HPP_

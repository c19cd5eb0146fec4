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

#include "etafuse/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "etafuse/error.hpp"
#include "etafuse/rng.hpp"
#include "etafuse/text_io.hpp"

namespace etafuse::gbdt {

namespace {

constexpr const char* kMagic = "eta-fuse-gbdt";

double middle_pair(double a, double b) {
  if (a <= 0.0 && 0.0 <= b) return 0.0;
  return (a + b) / 2.0;
}

// Sum of absolute deviations from the median of a multiset under deletions.
// Elements are positions 0..m-1 of an ascending residual array; the list
// keeps a pointer to the element of rank floor(n / 2) and the sum of the
// values ranked below it.
class DeletionSweep {
 public:
  void reset(std::span<const double> sorted, std::span<const std::uint8_t> included) {
    vals_ = sorted;
    const auto m = static_cast<std::uint32_t>(sorted.size());
    head_ = m;
    tail_ = m + 1;
    prev_.resize(m + 2);
    next_.resize(m + 2);
    std::uint32_t last = head_;
    n_ = 0;
    total_ = 0.0;
    for (std::uint32_t p = 0; p < m; ++p) {
      if (!included[p]) continue;
      next_[last] = p;
      prev_[p] = last;
      last = p;
      ++n_;
      total_ += vals_[p];
    }
    next_[last] = tail_;
    prev_[tail_] = last;
    lower_ = 0.0;
    mid_ = next_[head_];
    for (std::size_t k = 0; k < n_ / 2; ++k) {
      lower_ += vals_[mid_];
      mid_ = next_[mid_];
    }
  }

  void erase(std::uint32_t e) {
    if (n_ % 2 == 0) {
      if (e < mid_) {
        lower_ -= vals_[e];
      } else {
        mid_ = prev_[mid_];
        lower_ -= vals_[mid_];
      }
    } else if (e < mid_) {
      lower_ += vals_[mid_] - vals_[e];
      mid_ = next_[mid_];
    } else if (e == mid_) {
      mid_ = next_[mid_];
    }
    next_[prev_[e]] = next_[e];
    prev_[next_[e]] = prev_[e];
    total_ -= vals_[e];
    --n_;
    if (n_ == 0) {
      total_ = 0.0;
      lower_ = 0.0;
    }
  }

  double cost() const {
    if (n_ == 0) return 0.0;
    const double c = total_ - 2.0 * lower_ - (n_ % 2 == 1 ? vals_[mid_] : 0.0);
    return c > 0.0 ? c : 0.0;
  }

 private:
  std::span<const double> vals_;
  std::vector<std::uint32_t> prev_;
  std::vector<std::uint32_t> next_;
  std::uint32_t head_ = 0;
  std::uint32_t tail_ = 0;
  std::uint32_t mid_ = 0;
  std::size_t n_ = 0;
  double total_ = 0.0;
  double lower_ = 0.0;
};

struct NodeSplit {
  std::size_t feature_slot = 0;  // index into the builder's feature list
  SplitCandidate candidate;
};

using SortedColumns = std::vector<std::vector<std::uint32_t>>;

// Ascending by value with missing values last, ties by row.
std::vector<std::uint32_t> presort_column(const MatrixView& x, std::size_t j) {
  std::vector<std::uint32_t> order(x.rows);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const double va = x.at(a, j);
    const double vb = x.at(b, j);
    const bool ma = is_missing(va);
    const bool mb = is_missing(vb);
    if (ma != mb) return mb;
    if (!ma && va != vb) return va < vb;
    return a < b;
  });
  return order;
}

// Grows one tree. Every node owns the same [begin, end) segment in each
// per-feature order and in the residual order; children are formed by a
// stable partition of that segment.
class TreeBuilder {
 public:
  TreeBuilder(const MatrixView& x, std::span<const double> residuals, const GbdtConfig& config,
              std::vector<std::size_t> features, const SortedColumns* presorted)
      : x_(x), r_(residuals), config_(config), features_(std::move(features)) {
    const std::size_t n = x.rows;
    order_.reserve(features_.size());
    for (const std::size_t f : features_) {
      order_.push_back(presorted != nullptr ? (*presorted)[f] : presort_column(x, f));
    }
    rank_order_.resize(n);
    std::iota(rank_order_.begin(), rank_order_.end(), 0u);
    std::sort(rank_order_.begin(), rank_order_.end(), [&](std::uint32_t a, std::uint32_t b) {
      return r_[a] != r_[b] ? r_[a] < r_[b] : a < b;
    });
    rank_vals_.resize(n);
    pos_of_.resize(n);
    included_.resize(n);
    goes_left_.resize(n);
    buffer_.resize(n);
    pref_.resize(n + 1);
    pref_missing_.resize(n + 1);
    suf_.resize(n + 1);
    suf_missing_.resize(n + 1);
  }

  RegressionTree build() {
    tree_ = {};
    grow(0, x_.rows, 0);
    return std::move(tree_);
  }

  std::optional<NodeSplit> find_split(std::size_t begin, std::size_t end) {
    const std::size_t m = end - begin;
    const std::size_t min_leaf = config_.min_samples_leaf;
    if (m < 2 * min_leaf || m < 2) return std::nullopt;
    load_node(begin, end);
    const std::span<const double> vals(rank_vals_.data(), m);

    std::fill_n(included_.begin(), m, std::uint8_t{1});
    sweep_.reset(vals, std::span(included_.data(), m));
    const double parent = sweep_.cost();
    const double tol = 1e-12 * std::max(1.0, parent);

    std::optional<NodeSplit> best;
    double best_gain = 0.0;
    for (std::size_t slot = 0; slot < features_.size(); ++slot) {
      const std::size_t f = features_[slot];
      const std::uint32_t* seg = order_[slot].data() + begin;
      std::size_t nv = m;
      while (nv > 0 && is_missing(x_.at(seg[nv - 1], f))) --nv;
      if (nv < 2 || x_.at(seg[0], f) == x_.at(seg[nv - 1], f)) continue;
      const std::size_t nm = m - nv;

      sweep_prefix(seg, nv, m, /*with_missing=*/true, pref_missing_);
      sweep_suffix(seg, nv, m, /*with_missing=*/true, suf_missing_);
      const std::vector<double>* pref = &pref_missing_;
      const std::vector<double>* suf = &suf_missing_;
      if (nm > 0) {
        sweep_prefix(seg, nv, m, /*with_missing=*/false, pref_);
        sweep_suffix(seg, nv, m, /*with_missing=*/false, suf_);
        pref = &pref_;
        suf = &suf_;
      }

      for (std::size_t j = 1; j < nv; ++j) {
        const double a = x_.at(seg[j - 1], f);
        const double b = x_.at(seg[j], f);
        if (a == b) continue;
        // Missing rows on the left, then on the right.
        const bool left_ok = j + nm >= min_leaf && nv - j >= min_leaf;
        const bool right_ok = j >= min_leaf && nv - j + nm >= min_leaf;
        if (!left_ok && !right_ok) continue;
        const double gain_left = parent - pref_missing_[j] - (*suf)[j] - config_.gamma;
        const double gain_right = parent - (*pref)[j] - suf_missing_[j] - config_.gamma;
        const bool use_right = nm > 0 && right_ok && (!left_ok || gain_right > gain_left + tol);
        const double gain = use_right ? gain_right : gain_left;
        if (!(gain > best_gain + tol)) continue;
        double threshold = a * 0.5 + b * 0.5;
        if (!(threshold < b) || threshold < a) threshold = a;
        best_gain = gain;
        best = NodeSplit{slot, SplitCandidate{threshold, gain, !use_right,
                                              use_right ? j : j + nm,
                                              use_right ? nv - j + nm : nv - j}};
      }
    }
    return best;
  }

  std::size_t feature_at(std::size_t slot) const { return features_[slot]; }

 private:
  void load_node(std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint32_t id = rank_order_[i];
      rank_vals_[i - begin] = r_[id];
      pos_of_[id] = static_cast<std::uint32_t>(i - begin);
    }
  }

  void set_included(const std::uint32_t* seg, std::size_t nv, std::size_t m, bool with_missing) {
    if (with_missing) {
      std::fill_n(included_.begin(), m, std::uint8_t{1});
      return;
    }
    std::fill_n(included_.begin(), m, std::uint8_t{0});
    for (std::size_t t = 0; t < nv; ++t) included_[pos_of_[seg[t]]] = 1;
  }

  // out[j] = cost of the first j non-missing rows (plus missing rows).
  void sweep_prefix(const std::uint32_t* seg, std::size_t nv, std::size_t m, bool with_missing,
                    std::vector<double>& out) {
    set_included(seg, nv, m, with_missing);
    sweep_.reset(std::span(rank_vals_.data(), m), std::span(included_.data(), m));
    out[nv] = sweep_.cost();
    for (std::size_t t = nv; t-- > 0;) {
      sweep_.erase(pos_of_[seg[t]]);
      out[t] = sweep_.cost();
    }
  }

  // out[j] = cost of the non-missing rows from j on (plus missing rows).
  void sweep_suffix(const std::uint32_t* seg, std::size_t nv, std::size_t m, bool with_missing,
                    std::vector<double>& out) {
    set_included(seg, nv, m, with_missing);
    sweep_.reset(std::span(rank_vals_.data(), m), std::span(included_.data(), m));
    out[0] = sweep_.cost();
    for (std::size_t t = 0; t < nv; ++t) {
      sweep_.erase(pos_of_[seg[t]]);
      out[t + 1] = sweep_.cost();
    }
  }

  double leaf_value(std::size_t begin, std::size_t end) const {
    const std::size_t m = end - begin;
    const std::size_t mid = begin + m / 2;
    const double med = m % 2 == 1 ? r_[rank_order_[mid]]
                                  : middle_pair(r_[rank_order_[mid - 1]], r_[rank_order_[mid]]);
    return med / (1.0 + config_.lambda);
  }

  void partition(std::vector<std::uint32_t>& order, std::size_t begin, std::size_t end) {
    std::size_t out = begin;
    std::size_t spill = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint32_t id = order[i];
      if (goes_left_[id]) {
        order[out++] = id;
      } else {
        buffer_[spill++] = id;
      }
    }
    std::copy_n(buffer_.begin(), spill, order.begin() + static_cast<std::ptrdiff_t>(out));
  }

  int grow(std::size_t begin, std::size_t end, int depth) {
    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.depth = std::max(tree_.depth, depth);
    std::optional<NodeSplit> split;
    if (depth < config_.max_depth) split = find_split(begin, end);
    if (!split) {
      tree_.nodes[static_cast<std::size_t>(index)].value = leaf_value(begin, end);
      return index;
    }
    const std::size_t f = features_[split->feature_slot];
    const SplitCandidate& c = split->candidate;
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint32_t id = rank_order_[i];
      const double v = x_.at(id, f);
      goes_left_[id] = is_missing(v) ? c.missing_left : v <= c.threshold;
    }
    for (auto& order : order_) partition(order, begin, end);
    partition(rank_order_, begin, end);

    const std::size_t mid = begin + c.left_count;
    const int left = grow(begin, mid, depth + 1);
    const int right = grow(mid, end, depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(index)];
    node.feature = static_cast<int>(f);
    node.threshold = c.threshold;
    node.missing_left = c.missing_left;
    node.left = left;
    node.right = right;
    return index;
  }

  const MatrixView& x_;
  std::span<const double> r_;
  const GbdtConfig& config_;
  std::vector<std::size_t> features_;
  SortedColumns order_;
  std::vector<std::uint32_t> rank_order_;
  std::vector<double> rank_vals_;
  std::vector<std::uint32_t> pos_of_;
  std::vector<std::uint8_t> included_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<std::uint32_t> buffer_;
  std::vector<double> pref_;
  std::vector<double> pref_missing_;
  std::vector<double> suf_;
  std::vector<double> suf_missing_;
  DeletionSweep sweep_;
  RegressionTree tree_;
};

std::vector<std::size_t> all_features(std::size_t p) {
  std::vector<std::size_t> f(p);
  std::iota(f.begin(), f.end(), std::size_t{0});
  return f;
}

std::vector<std::size_t> sample_features(std::size_t p, double fraction, Rng& rng) {
  auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(p)));
  k = std::clamp<std::size_t>(k, 1, p);
  std::vector<std::size_t> f = all_features(p);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(p - i));
    std::swap(f[i], f[j]);
  }
  f.resize(k);
  std::sort(f.begin(), f.end());
  return f;
}

double mean_abs_residual(std::span<const double> y, std::span<const double> pred) {
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += std::abs(y[i] - pred[i]);
  return sum / static_cast<double>(y.size());
}

void check_width(const GbdtModel& model, std::size_t width) {
  if (width != model.n_features) {
    throw ValidationError("gbdt: expected " + std::to_string(model.n_features) +
                          " feature columns, got " + std::to_string(width));
  }
}

}  // namespace

void validate(const GbdtConfig& c) {
  if (c.n_trees < 0) throw ValidationError("gbdt: n_trees must be non-negative");
  if (!(c.learning_rate > 0.0 && c.learning_rate <= 1.0)) {
    throw ValidationError("gbdt: learning_rate must be in (0, 1]");
  }
  if (c.max_depth < 0) throw ValidationError("gbdt: max_depth must be non-negative");
  if (c.min_samples_leaf < 1) throw ValidationError("gbdt: min_samples_leaf must be at least 1");
  if (!(c.gamma >= 0.0)) throw ValidationError("gbdt: gamma must be non-negative");
  if (!(c.lambda >= 0.0)) throw ValidationError("gbdt: lambda must be non-negative");
  if (!(c.feature_subsample > 0.0 && c.feature_subsample <= 1.0)) {
    throw ValidationError("gbdt: feature_subsample must be in (0, 1]");
  }
}

MatrixView::MatrixView(std::span<const double> v, std::size_t r, std::size_t c)
    : values(v), rows(r), cols(c) {
  if (v.size() != r * c) {
    throw ValidationError("gbdt: matrix has " + std::to_string(v.size()) + " values, expected " +
                          std::to_string(r) + " x " + std::to_string(c));
  }
}

std::size_t RegressionTree::leaf_index(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    const double v = row[static_cast<std::size_t>(n.feature)];
    const bool left = is_missing(v) ? n.missing_left : v <= n.threshold;
    i = static_cast<std::size_t>(left ? n.left : n.right);
  }
  return i;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

double median(std::span<const double> values) {
  if (values.empty()) throw ValidationError("median of an empty set");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return middle_pair(lower, upper);
}

double l1_impurity(std::span<const double> residuals) {
  if (residuals.empty()) return 0.0;
  const double m = median(residuals);
  double s = 0.0;
  for (const double r : residuals) s += std::abs(r - m);
  return s;
}

std::optional<SplitCandidate> best_split(std::span<const double> column,
                                         std::span<const double> residuals,
                                         const GbdtConfig& config) {
  if (column.size() != residuals.size()) {
    throw ValidationError("gbdt: column and residual lengths differ");
  }
  if (column.empty()) return std::nullopt;
  const MatrixView x(column, column.size(), 1);
  TreeBuilder builder(x, residuals, config, {0}, nullptr);
  const auto split = builder.find_split(0, column.size());
  if (!split) return std::nullopt;
  return split->candidate;
}

RegressionTree fit_tree(const MatrixView& x, std::span<const double> residuals,
                        const GbdtConfig& config, std::span<const std::size_t> features) {
  if (x.rows == 0) throw ValidationError("gbdt: cannot fit a tree on an empty dataset");
  if (residuals.size() != x.rows) throw ValidationError("gbdt: residual count differs from rows");
  std::vector<std::size_t> f = features.empty()
                                   ? all_features(x.cols)
                                   : std::vector<std::size_t>(features.begin(), features.end());
  TreeBuilder builder(x, residuals, config, std::move(f), nullptr);
  return builder.build();
}

GbdtModel boost(const MatrixView& x, std::span<const double> y, const GbdtConfig& config) {
  validate(config);
  if (y.size() != x.rows) {
    throw ValidationError("gbdt: " + std::to_string(y.size()) + " labels for " +
                          std::to_string(x.rows) + " rows");
  }
  if (x.rows == 0 || x.rows < 2 * config.min_samples_leaf) {
    throw ValidationError("gbdt: need at least " + std::to_string(2 * config.min_samples_leaf) +
                          " rows, got " + std::to_string(x.rows));
  }
  GbdtModel model;
  model.config = config;
  model.n_features = x.cols;
  model.base_score = median(y);

  std::vector<double> pred(x.rows, model.base_score);
  model.train_mae.push_back(mean_abs_residual(y, pred));
  if (config.n_trees == 0 || x.cols == 0) {
    return model;
  }

  SortedColumns presorted;
  presorted.reserve(x.cols);
  for (std::size_t j = 0; j < x.cols; ++j) presorted.push_back(presort_column(x, j));

  std::vector<double> residuals(x.rows);
  for (int k = 0; k < config.n_trees; ++k) {
    Rng rng(derive_seed(config.seed, "gbdt/tree/" + std::to_string(k)));
    std::vector<std::size_t> features = sample_features(x.cols, config.feature_subsample, rng);
    for (std::size_t i = 0; i < x.rows; ++i) residuals[i] = y[i] - pred[i];
    TreeBuilder builder(x, residuals, config, std::move(features), &presorted);
    RegressionTree tree = builder.build();
    for (std::size_t i = 0; i < x.rows; ++i) {
      pred[i] += config.learning_rate * tree.predict(x.row(i));
    }
    model.trees.push_back(std::move(tree));
    model.train_mae.push_back(mean_abs_residual(y, pred));
  }
  return model;
}

double predict_row(const GbdtModel& model, std::span<const double> row) {
  check_width(model, row.size());
  double acc = model.base_score;
  for (const RegressionTree& tree : model.trees) {
    acc += model.config.learning_rate * tree.predict(row);
  }
  return acc;
}

std::vector<double> predict(const GbdtModel& model, const MatrixView& x) {
  check_width(model, x.cols);
  std::vector<double> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict_row(model, x.row(i));
  return out;
}

void write_training_log(std::ostream& out, const GbdtModel& model) {
  out << "iteration,train_mae\n";
  for (std::size_t k = 0; k < model.train_mae.size(); ++k) {
    out << k << ',' << format_double(model.train_mae[k]) << '\n';
  }
}

void save_model(const GbdtModel& model, std::ostream& out) {
  const GbdtConfig& c = model.config;
  out << kMagic << ' ' << kModelFormatVersion << '\n';
  out << "config " << c.n_trees << ' ' << format_double(c.learning_rate) << ' ' << c.max_depth
      << ' ' << c.min_samples_leaf << ' ' << format_double(c.gamma) << ' '
      << format_double(c.lambda) << ' ' << format_double(c.feature_subsample) << ' ' << c.seed
      << '\n';
  out << "n_features " << model.n_features << '\n';
  out << "base_score " << format_double(model.base_score) << '\n';
  out << "train_mae " << model.train_mae.size();
  for (const double v : model.train_mae) out << ' ' << format_double(v);
  out << '\n';
  out << "trees " << model.trees.size() << '\n';
  for (const RegressionTree& tree : model.trees) {
    out << "tree " << tree.nodes.size() << ' ' << tree.depth << '\n';
    for (const TreeNode& n : tree.nodes) {
      out << "node " << n.feature << ' ' << format_double(n.threshold) << ' ' << n.left << ' '
          << n.right << ' ' << (n.missing_left ? 1 : 0) << ' ' << format_double(n.value) << '\n';
    }
  }
  out << "end\n";
}

void save_model(const GbdtModel& model, const std::filesystem::path& path) {
  std::ostringstream buffer;
  save_model(model, buffer);
  write_file_atomic(path, buffer.str());
}

GbdtModel load_model(std::istream& in) {
  TokenReader r(in);
  if (r.word("magic") != kMagic) throw ParseError(r.line(), "magic", "not a gbdt model file");
  const std::int64_t version = r.integer("version");
  if (version != kModelFormatVersion) {
    throw ValidationError("gbdt model version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kModelFormatVersion) +
                          ")");
  }
  GbdtModel m;
  GbdtConfig& c = m.config;
  r.expect("config");
  c.n_trees = static_cast<int>(r.integer("n_trees"));
  c.learning_rate = r.real("learning_rate");
  c.max_depth = static_cast<int>(r.integer("max_depth"));
  c.min_samples_leaf = r.count("min_samples_leaf");
  c.gamma = r.real("gamma");
  c.lambda = r.real("lambda");
  c.feature_subsample = r.real("feature_subsample");
  c.seed = r.unsigned_integer("seed");
  r.expect("n_features");
  m.n_features = r.count("n_features");
  r.expect("base_score");
  m.base_score = r.real("base_score");
  r.expect("train_mae");
  m.train_mae.resize(r.count("train_mae"));
  for (double& v : m.train_mae) v = r.real("train_mae");
  r.expect("trees");
  m.trees.resize(r.count("trees"));
  for (RegressionTree& tree : m.trees) {
    r.expect("tree");
    tree.nodes.resize(r.count("nodes"));
    tree.depth = static_cast<int>(r.integer("depth"));
    const auto n_nodes = static_cast<std::int64_t>(tree.nodes.size());
    if (n_nodes == 0) throw ParseError(r.line(), "nodes", "tree without nodes");
    for (std::int64_t i = 0; i < n_nodes; ++i) {
      TreeNode& n = tree.nodes[static_cast<std::size_t>(i)];
      r.expect("node");
      n.feature = static_cast<int>(r.integer("feature"));
      n.threshold = r.real("threshold");
      n.left = static_cast<int>(r.integer("left"));
      n.right = static_cast<int>(r.integer("right"));
      n.missing_left = r.integer("missing_left") != 0;
      n.value = r.real("value");
      if (n.feature >= 0) {
        if (static_cast<std::size_t>(n.feature) >= m.n_features) {
          throw ParseError(r.line(), "feature", "feature index out of range");
        }
        if (n.left <= i || n.right <= i || n.left >= n_nodes || n.right >= n_nodes) {
          throw ParseError(r.line(), "left", "child index out of range");
        }
      }
    }
  }
  r.expect("end");
  return m;
}

GbdtModel load_model(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  try {
    return load_model(in);
  } catch (const ParseError& e) {
    throw ValidationError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace etafuse::gbdt

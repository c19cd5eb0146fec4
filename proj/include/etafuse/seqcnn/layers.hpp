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

#ifndef ETAFUSE_SEQCNN_LAYERS_HPP_
#define ETAFUSE_SEQCNN_LAYERS_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "etafuse/rng.hpp"
#include "etafuse/seqcnn/tensor.hpp"

namespace etafuse::seqcnn {

inline constexpr std::array<int, 4> kRegionSizes{2, 3, 4, 5};
inline constexpr int kFiltersPerSize = 32;
inline constexpr int kPooledWidth =
    static_cast<int>(kRegionSizes.size()) * kFiltersPerSize;  // 128

// Dictionary encoding of raw integer tokens onto embedding rows. Rows below
// `first_row` are reserved (padding and/or out-of-vocabulary).
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::int64_t> ids, std::size_t first_row, std::size_t oov_row);

  std::size_t row(std::int64_t id) const;
  std::size_t rows() const { return first_row_ + ids_.size(); }
  const std::vector<std::int64_t>& ids() const { return ids_; }
  std::size_t first_row() const { return first_row_; }
  std::size_t oov_row() const { return oov_row_; }

 private:
  std::vector<std::int64_t> ids_;
  std::size_t first_row_ = 0;
  std::size_t oov_row_ = 0;
  std::unordered_map<std::int64_t, std::size_t> index_;
};

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  // With `padding_row`, row 0 is a fixed all-zero row that never trains.
  EmbeddingTable(std::string name, Index rows, Index dim, bool padding_row);

  Index dim() const { return weight.value.cols(); }
  Index rows() const { return weight.value.rows(); }
  bool has_padding_row() const { return padding_row_; }

  void init(Rng& rng, double scale);
  // out.block(i, col, 1, dim) = row(rows[i]).
  void gather(std::span<const std::size_t> rows, Matrix& out, Index col) const;
  void scatter_grad(std::span<const std::size_t> rows, const Matrix& d_out, Index col);

  Tensor weight;

 private:
  bool padding_row_ = false;
};

// Forward state of one convolution region size.
struct ConvOutput {
  Matrix padded;   // zero-padded input copy, used only when input rows < region
  Matrix pre;      // o + b, one row per window position
  Matrix act;      // rectified feature map c
  Index valid = 0; // windows lying fully inside the valid input rows
};

// One region size h of a filter bank: `filters` filters, each an h x in_dim
// weight matrix, applied at start positions 0, stride, 2*stride, ...
class ConvLayer {
 public:
  ConvLayer() = default;
  ConvLayer(std::string name, int region, Index in_dim, int filters, int stride);

  int region() const { return region_; }
  int stride() const { return stride_; }
  Index in_dim() const { return in_dim_; }

  // Positions for an input of `rows` rows; inputs shorter than the region
  // are zero-padded up to it.
  static Index output_length(Index rows, int region, int stride);

  void init(Rng& rng);
  // Rows of `input` at or beyond `valid_rows` are padding: windows touching
  // them are excluded from `valid`.
  void forward(const Matrix& input, Index valid_rows, ConvOutput& out) const;
  // Accumulates parameter gradients; adds the input gradient into
  // `d_input` (same shape as `input`) when it is non-null.
  void backward(const Matrix& input, const ConvOutput& out, const Matrix& d_act,
                Matrix* d_input);

  Tensor weight;  // (region * in_dim) x filters, window-major
  Tensor bias;    // 1 x filters

 private:
  int region_ = 0;
  int stride_ = 1;
  Index in_dim_ = 0;
};

// The four region sizes {2, 3, 4, 5} with kFiltersPerSize filters each.
struct ConvBank {
  std::array<ConvLayer, kRegionSizes.size()> layers;

  ConvBank() = default;
  ConvBank(const std::string& name, Index in_dim, int stride);
  void init(Rng& rng);
};

using BankOutputs = std::array<ConvOutput, kRegionSizes.size()>;

void conv1d(const ConvBank& bank, const Matrix& input, Index valid_rows, BankOutputs& out);

struct PoolOutput {
  RowVector values;
  std::vector<Index> argmax;  // winning row per channel
};

// Channel-wise maximum over the first `valid_rows` rows (ties resolve to
// the earliest row).
PoolOutput global_max_pool(const Matrix& c, Index valid_rows);
void global_max_pool_backward(const PoolOutput& pool, const RowVector& d_out,
                              Matrix& d_c, Index col = 0);

// y = x W + b.
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(std::string name, Index in_dim, Index out_dim);

  Index in_dim() const { return weight.value.rows(); }
  Index out_dim() const { return weight.value.cols(); }

  void init(Rng& rng);
  RowVector forward(const RowVector& x) const;
  void backward(const RowVector& x, const RowVector& d_out, RowVector* d_x);

  Tensor weight;
  Tensor bias;
};

struct LossValue {
  double loss = 0.0;
  double grad = 0.0;  // d loss / d prediction
};

// |pred - target| / target with subgradient 0 at pred == target. Throws
// ValidationError when target <= 0.
LossValue mape_loss(double prediction, double target);

}  // namespace etafuse::seqcnn

#endif  // ETAFUSE_SEQCNN_LAYERS_HPP_

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

#include "etafuse/seqcnn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "etafuse/error.hpp"

namespace etafuse::seqcnn {

Vocabulary::Vocabulary(std::vector<std::int64_t> ids, std::size_t first_row,
                       std::size_t oov_row)
    : ids_(std::move(ids)), first_row_(first_row), oov_row_(oov_row) {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], first_row_ + i).second) {
      throw ValidationError("vocabulary: duplicate token " + std::to_string(ids_[i]));
    }
  }
}

std::size_t Vocabulary::row(std::int64_t id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? oov_row_ : it->second;
}

EmbeddingTable::EmbeddingTable(std::string name, Index rows, Index dim, bool padding_row)
    : weight(std::move(name), rows, dim), padding_row_(padding_row) {}

void EmbeddingTable::init(Rng& rng, double scale) {
  for (Index i = 0; i < weight.value.rows(); ++i) {
    for (Index j = 0; j < weight.value.cols(); ++j) {
      weight.value(i, j) = (padding_row_ && i == 0) ? 0.0 : scale * rng.normal();
    }
  }
}

void EmbeddingTable::gather(std::span<const std::size_t> rows, Matrix& out,
                            Index col) const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.block(static_cast<Index>(i), col, 1, dim()) =
        weight.value.row(static_cast<Index>(rows[i]));
  }
}

void EmbeddingTable::scatter_grad(std::span<const std::size_t> rows,
                                  const Matrix& d_out, Index col) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (padding_row_ && rows[i] == 0) continue;
    weight.grad.row(static_cast<Index>(rows[i])) +=
        d_out.block(static_cast<Index>(i), col, 1, dim());
  }
}

ConvLayer::ConvLayer(std::string name, int region, Index in_dim, int filters, int stride)
    : weight(name + ".w", region * in_dim, filters),
      bias(name + ".b", 1, filters),
      region_(region),
      stride_(stride),
      in_dim_(in_dim) {}

Index ConvLayer::output_length(Index rows, int region, int stride) {
  const Index effective = std::max<Index>(rows, region);
  return (effective - region) / stride + 1;
}

void ConvLayer::init(Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(weight.value.rows()));
  for (Index i = 0; i < weight.value.size(); ++i) {
    weight.value.data()[i] = rng.uniform(-limit, limit);
  }
  bias.value.setZero();
}

namespace {

using StridedRows = Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>;
using MutableStridedRows = Eigen::Map<Matrix, 0, Eigen::OuterStride<>>;

}  // namespace

void ConvLayer::forward(const Matrix& input, Index valid_rows, ConvOutput& out) const {
  if (input.cols() != in_dim_) {
    throw ValidationError("conv '" + weight.name + "': input width " +
                          std::to_string(input.cols()) + " != " + std::to_string(in_dim_));
  }
  const Matrix* x = &input;
  if (input.rows() < region_) {
    out.padded = Matrix::Zero(region_, in_dim_);
    out.padded.topRows(input.rows()) = input;
    x = &out.padded;
  } else {
    out.padded.resize(0, 0);
  }
  const Index positions = output_length(x->rows(), region_, stride_);
  const Index k = in_dim_;
  out.pre = bias.value.replicate(positions, 1);
  for (Index j = 0; j < region_; ++j) {
    const StridedRows window(x->data() + j * k, positions, k,
                             Eigen::OuterStride<>(stride_ * k));
    out.pre.noalias() += window * weight.value.middleRows(j * k, k);
  }
  out.act = out.pre.cwiseMax(0.0);
  const Index valid_input = std::min(valid_rows, input.rows());
  out.valid = std::min(positions, output_length(valid_input, region_, stride_));
}

void ConvLayer::backward(const Matrix& input, const ConvOutput& out,
                         const Matrix& d_act, Matrix* d_input) {
  const Matrix& x = out.padded.size() > 0 ? out.padded : input;
  const Index positions = out.pre.rows();
  const Index k = in_dim_;
  const Matrix d_pre =
      d_act.cwiseProduct((out.pre.array() > 0.0).cast<double>().matrix());
  bias.grad += d_pre.colwise().sum();
  for (Index j = 0; j < region_; ++j) {
    const StridedRows window(x.data() + j * k, positions, k,
                             Eigen::OuterStride<>(stride_ * k));
    weight.grad.middleRows(j * k, k).noalias() += window.transpose() * d_pre;
  }
  if (d_input == nullptr) return;
  Matrix d_x = Matrix::Zero(x.rows(), k);
  for (Index j = 0; j < region_; ++j) {
    MutableStridedRows d_window(d_x.data() + j * k, positions, k,
                                Eigen::OuterStride<>(stride_ * k));
    d_window.noalias() += d_pre * weight.value.middleRows(j * k, k).transpose();
  }
  d_input->topRows(input.rows()) += d_x.topRows(input.rows());
}

ConvBank::ConvBank(const std::string& name, Index in_dim, int stride) {
  for (std::size_t i = 0; i < kRegionSizes.size(); ++i) {
    layers[i] = ConvLayer(name + ".h" + std::to_string(kRegionSizes[i]),
                          kRegionSizes[i], in_dim, kFiltersPerSize, stride);
  }
}

void ConvBank::init(Rng& rng) {
  for (ConvLayer& layer : layers) layer.init(rng);
}

void conv1d(const ConvBank& bank, const Matrix& input, Index valid_rows,
            BankOutputs& out) {
  for (std::size_t i = 0; i < bank.layers.size(); ++i) {
    bank.layers[i].forward(input, valid_rows, out[i]);
  }
}

PoolOutput global_max_pool(const Matrix& c, Index valid_rows) {
  const Index rows = std::min(valid_rows, c.rows());
  if (rows < 1) throw ValidationError("global_max_pool: no valid positions");
  PoolOutput pool;
  pool.values.resize(c.cols());
  pool.argmax.assign(static_cast<std::size_t>(c.cols()), 0);
  for (Index j = 0; j < c.cols(); ++j) {
    Index best = 0;
    for (Index i = 1; i < rows; ++i) {
      if (c(i, j) > c(best, j)) best = i;
    }
    pool.values(j) = c(best, j);
    pool.argmax[static_cast<std::size_t>(j)] = best;
  }
  return pool;
}

void global_max_pool_backward(const PoolOutput& pool, const RowVector& d_out,
                              Matrix& d_c, Index col) {
  for (std::size_t j = 0; j < pool.argmax.size(); ++j) {
    const auto jj = static_cast<Index>(j);
    d_c(pool.argmax[j], jj) += d_out(col + jj);
  }
}

DenseLayer::DenseLayer(std::string name, Index in_dim, Index out_dim)
    : weight(name + ".w", in_dim, out_dim), bias(name + ".b", 1, out_dim) {}

void DenseLayer::init(Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in_dim()));
  for (Index i = 0; i < weight.value.size(); ++i) {
    weight.value.data()[i] = rng.uniform(-limit, limit);
  }
  bias.value.setZero();
}

RowVector DenseLayer::forward(const RowVector& x) const {
  RowVector y = bias.value.row(0);
  y.noalias() += x * weight.value;
  return y;
}

void DenseLayer::backward(const RowVector& x, const RowVector& d_out, RowVector* d_x) {
  weight.grad.noalias() += x.transpose() * d_out;
  bias.grad.row(0) += d_out;
  if (d_x != nullptr) d_x->noalias() += d_out * weight.value.transpose();
}

LossValue mape_loss(double prediction, double target) {
  if (!(target > 0.0)) {
    throw ValidationError("mape_loss: target must be > 0");
  }
  const double diff = prediction - target;
  LossValue out;
  out.loss = std::abs(diff) / target;
  out.grad = diff > 0.0 ? 1.0 / target : (diff < 0.0 ? -1.0 / target : 0.0);
  return out;
}

}  // namespace etafuse::seqcnn

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

#ifndef ETAFUSE_TESTS_LAYER_CHECKS_HPP_
#define ETAFUSE_TESTS_LAYER_CHECKS_HPP_

// Finite-difference checks of each network layer in isolation. Every check
// reduces the layer output to a scalar with fixed random coefficients so the
// upstream gradient is dense.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "etafuse/rng.hpp"
#include "etafuse/seqcnn/gradient_check.hpp"
#include "etafuse/seqcnn/layers.hpp"

namespace etafuse::testing {

using seqcnn::GradientCheckResult;
using seqcnn::Index;
using seqcnn::Matrix;
using seqcnn::RowVector;
using seqcnn::Tensor;

inline Matrix random_matrix(Rng& rng, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

inline double weighted_sum(const Matrix& a, const Matrix& coeff) {
  return a.cwiseProduct(coeff).sum();
}

inline GradientCheckResult embedding_layer_check(std::uint64_t seed, double eps = 1e-5) {
  Rng rng(seed);
  seqcnn::EmbeddingTable table("emb", 12, 5, false);
  table.init(rng, 0.5);
  // Repeated rows exercise gradient accumulation.
  const std::vector<std::size_t> rows{3, 0, 7, 3, 11, 1};
  const Matrix coeff = random_matrix(rng, static_cast<Index>(rows.size()), 7);
  auto loss = [&] {
    Matrix out = Matrix::Zero(static_cast<Index>(rows.size()), 7);
    table.gather(rows, out, 2);
    return weighted_sum(out, coeff);
  };
  table.weight.zero_grad();
  table.scatter_grad(rows, coeff, 2);
  Tensor* params[] = {&table.weight};
  return seqcnn::check_gradients(params, loss, 200, eps, seed);
}

// Input gradient of a convolution layer, computed with explicit loops. With
// `skip_relu_mask` the rectifier derivative is ignored, which is the
// mutation used as a negative control.
struct ConvGrads {
  Matrix weight;
  Matrix bias;
  Matrix input;
};

inline ConvGrads reference_conv_backward(const seqcnn::ConvLayer& layer, const Matrix& input,
                                         const Matrix& coeff, bool skip_relu_mask) {
  const Index k = layer.in_dim();
  const Index h = layer.region();
  const Index stride = layer.stride();
  Matrix x = input;
  if (x.rows() < h) {
    x = Matrix::Zero(h, k);
    x.topRows(input.rows()) = input;
  }
  const Index positions = seqcnn::ConvLayer::output_length(x.rows(), layer.region(), layer.stride());
  const Index filters = layer.weight.value.cols();
  ConvGrads g{Matrix::Zero(h * k, filters), Matrix::Zero(1, filters), Matrix::Zero(x.rows(), k)};
  for (Index i = 0; i < positions; ++i) {
    for (Index f = 0; f < filters; ++f) {
      double o = layer.bias.value(0, f);
      for (Index r = 0; r < h; ++r) {
        for (Index c = 0; c < k; ++c) o += x(i * stride + r, c) * layer.weight.value(r * k + c, f);
      }
      const double d = (skip_relu_mask || o > 0.0) ? coeff(i, f) : 0.0;
      g.bias(0, f) += d;
      for (Index r = 0; r < h; ++r) {
        for (Index c = 0; c < k; ++c) {
          g.weight(r * k + c, f) += d * x(i * stride + r, c);
          g.input(i * stride + r, c) += d * layer.weight.value(r * k + c, f);
        }
      }
    }
  }
  g.input.conservativeResize(input.rows(), k);
  return g;
}

struct ConvCheck {
  GradientCheckResult library;    // the layer's own backward
  GradientCheckResult mutated;    // reference backward without the rectifier mask
  double reference_gap = 0.0;     // max |library - reference| over all gradients
};

inline ConvCheck conv_layer_check(int region, int stride, Index rows, std::uint64_t seed,
                                  double eps = 1e-5) {
  Rng rng(seed);
  const Index in_dim = 4;
  seqcnn::ConvLayer layer("conv", region, in_dim, 6, stride);
  layer.init(rng);
  for (Index f = 0; f < 6; ++f) layer.bias.value(0, f) = rng.uniform(-0.2, 0.2);
  Tensor input("input", rows, in_dim);
  input.value = random_matrix(rng, rows, in_dim);
  const Index positions = seqcnn::ConvLayer::output_length(rows, region, stride);
  const Matrix coeff = random_matrix(rng, positions, 6);
  auto loss = [&] {
    seqcnn::ConvOutput out;
    layer.forward(input.value, rows, out);
    return weighted_sum(out.act, coeff);
  };
  Tensor* params[] = {&layer.weight, &layer.bias, &input};

  ConvCheck result;
  seqcnn::ConvOutput out;
  layer.forward(input.value, rows, out);
  layer.weight.zero_grad();
  layer.bias.zero_grad();
  input.zero_grad();
  layer.backward(input.value, out, coeff, &input.grad);
  result.library = seqcnn::check_gradients(params, loss, 200, eps, seed);

  const ConvGrads ref = reference_conv_backward(layer, input.value, coeff, false);
  result.reference_gap = std::max({(ref.weight - layer.weight.grad).cwiseAbs().maxCoeff(),
                                   (ref.bias - layer.bias.grad).cwiseAbs().maxCoeff(),
                                   (ref.input - input.grad).cwiseAbs().maxCoeff()});

  const ConvGrads bad = reference_conv_backward(layer, input.value, coeff, true);
  layer.weight.grad = bad.weight;
  layer.bias.grad = bad.bias;
  input.grad = bad.input;
  result.mutated = seqcnn::check_gradients(params, loss, 200, eps, seed);
  return result;
}

inline GradientCheckResult pool_layer_check(std::uint64_t seed, double eps = 1e-5) {
  Rng rng(seed);
  Tensor c("pool.input", 9, 5);
  c.value = random_matrix(rng, 9, 5);
  // The last two rows are padding and must never win.
  c.value.bottomRows(2).setConstant(5.0);
  const Index valid = 7;
  const Matrix coeff = random_matrix(rng, 1, 5);
  auto loss = [&] {
    const auto pool = seqcnn::global_max_pool(c.value, valid);
    return weighted_sum(pool.values, coeff);
  };
  c.zero_grad();
  const auto pool = seqcnn::global_max_pool(c.value, valid);
  seqcnn::global_max_pool_backward(pool, coeff.row(0), c.grad);
  Tensor* params[] = {&c};
  return seqcnn::check_gradients(params, loss, 200, eps, seed);
}

inline GradientCheckResult dense_layer_check(std::uint64_t seed, bool rectified,
                                             double eps = 1e-5) {
  Rng rng(seed);
  seqcnn::DenseLayer layer("dense", 7, 5);
  layer.init(rng);
  for (Index j = 0; j < 5; ++j) layer.bias.value(0, j) = rng.uniform(-0.2, 0.2);
  Tensor x("dense.input", 1, 7);
  x.value = random_matrix(rng, 1, 7);
  const Matrix coeff = random_matrix(rng, 1, 5);
  auto activate = [&](const RowVector& pre) -> RowVector {
    return rectified ? RowVector(pre.cwiseMax(0.0)) : pre;
  };
  auto loss = [&] {
    return weighted_sum(activate(layer.forward(x.value.row(0))), coeff);
  };
  layer.weight.zero_grad();
  layer.bias.zero_grad();
  x.zero_grad();
  const RowVector pre = layer.forward(x.value.row(0));
  RowVector d_out = coeff.row(0);
  if (rectified) d_out = d_out.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  RowVector d_x = RowVector::Zero(7);
  layer.backward(x.value.row(0), d_out, &d_x);
  x.grad.row(0) = d_x;
  Tensor* params[] = {&layer.weight, &layer.bias, &x};
  return seqcnn::check_gradients(params, loss, 200, eps, seed);
}

// The positive output transform feeding the loss: p = s * exp(tau * z),
// loss = MAPE(p, y), differentiated with respect to z.
inline GradientCheckResult mape_head_check(std::uint64_t seed, double eps = 1e-5) {
  Rng rng(seed);
  GradientCheckResult worst;
  for (int i = 0; i < 50; ++i) {
    const double s = rng.uniform(100.0, 2000.0);
    const double y = s * rng.uniform(0.5, 2.0);
    const double tau = 0.25;
    Tensor z("z", 1, 1);
    z.value(0, 0) = rng.uniform(-2.0, 2.0);
    auto loss = [&] { return seqcnn::mape_loss(s * std::exp(tau * z.value(0, 0)), y).loss; };
    const double p = s * std::exp(tau * z.value(0, 0));
    if (std::abs(p - y) < 1e-3 * y) continue;
    z.grad(0, 0) = seqcnn::mape_loss(p, y).grad * p * tau;
    Tensor* params[] = {&z};
    const auto r = seqcnn::check_gradients(params, loss, 2, eps, seed + static_cast<std::uint64_t>(i));
    worst.checked += r.checked;
    worst.max_relative_error = std::max(worst.max_relative_error, r.max_relative_error);
  }
  return worst;
}

}  // namespace etafuse::testing

#endif  // ETAFUSE_TESTS_LAYER_CHECKS_HPP_

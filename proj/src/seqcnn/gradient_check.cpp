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

#include "etafuse/seqcnn/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "etafuse/rng.hpp"

namespace etafuse::seqcnn {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradientCheckResult check_gradients(std::span<Tensor* const> params,
                                    const std::function<double()>& loss,
                                    std::size_t samples, double epsilon, std::uint64_t seed) {
  GradientCheckResult result;
  if (params.empty()) return result;
  Rng rng(seed);
  const std::size_t per_tensor = std::max<std::size_t>(2, (samples + params.size() - 1) / params.size());
  for (Tensor* p : params) {
    std::vector<Index> nonzero;
    for (Index i = 0; i < p->grad.size(); ++i) {
      if (p->grad.data()[i] != 0.0) nonzero.push_back(i);
    }
    for (std::size_t k = 0; k < per_tensor; ++k) {
      Index idx = 0;
      if (k % 2 == 0 && !nonzero.empty()) {
        idx = nonzero[rng.below(nonzero.size())];
      } else {
        idx = static_cast<Index>(rng.below(static_cast<std::uint64_t>(p->value.size())));
      }
      double& w = p->value.data()[idx];
      const double saved = w;
      w = saved + epsilon;
      const double plus = loss();
      w = saved - epsilon;
      const double minus = loss();
      w = saved;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double err = relative_error(p->grad.data()[idx], numeric);
      ++result.checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = p->name + "[" + std::to_string(idx) + "]";
      }
    }
  }
  return result;
}

GradientCheckResult gradient_check(SeqCnnModel& model, const TrainingSample& sample,
                                   double epsilon, std::size_t samples, std::uint64_t seed) {
  const SampleView view =
      make_view(model, *sample.trip, sample.dense, sample.categorical);
  const double target = sample.trip->header.ata;
  ForwardTrace trace;
  model.zero_grad();
  const double pred = forward(model, view, &trace);
  if (std::abs(pred - target) <= 1e-9 * target) {
    GradientCheckResult skipped;
    skipped.skipped = true;
    return skipped;
  }
  backward(model, trace, mape_loss(pred, target).grad);
  const auto params = model.parameters();
  auto result = check_gradients(
      params, [&] { return mape_loss(forward(model, view), target).loss; }, samples, epsilon,
      seed);
  model.zero_grad();
  return result;
}

}  // namespace etafuse::seqcnn

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

#ifndef ETAFUSE_SEQCNN_GRADIENT_CHECK_HPP_
#define ETAFUSE_SEQCNN_GRADIENT_CHECK_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "etafuse/seqcnn/model.hpp"
#include "etafuse/seqcnn/train.hpp"

namespace etafuse::seqcnn {

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::string worst_parameter;
  bool skipped = false;  // sample sits on the MAPE kink
};

// |a - b| / max(|a|, |b|, 1e-8).
double relative_error(double analytic, double numeric);

// Compares the gradients already stored in `params` against central
// differences of `loss` for `samples` randomly chosen entries. Half of the
// entries of each tensor are drawn among those with a non-zero analytic
// gradient.
GradientCheckResult check_gradients(std::span<Tensor* const> params,
                                    const std::function<double()>& loss,
                                    std::size_t samples, double epsilon, std::uint64_t seed);

// Reverse-mode vs finite differences of the MAPE loss of one sample.
GradientCheckResult gradient_check(SeqCnnModel& model, const TrainingSample& sample,
                                   double epsilon, std::size_t samples = 200,
                                   std::uint64_t seed = 7);

}  // namespace etafuse::seqcnn

#endif  // ETAFUSE_SEQCNN_GRADIENT_CHECK_HPP_

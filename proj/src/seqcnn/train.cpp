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

#include "etafuse/seqcnn/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "etafuse/error.hpp"
#include "etafuse/rng.hpp"

namespace etafuse::seqcnn {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEpsilon = 1e-8;

SampleView view_of(const SeqCnnModel& model, const TrainingSample& sample) {
  return make_view(model, *sample.trip, sample.dense, sample.categorical);
}

}  // namespace

std::vector<TrainingSample> make_samples(std::span<const Trip> trips,
                                         const features::DriverHistoryIndex& history) {
  std::vector<TrainingSample> samples;
  samples.reserve(trips.size());
  for (const Trip& trip : trips) {
    samples.push_back({&trip, features::nn_dense(trip), features::nn_categorical(trip, history)});
  }
  return samples;
}

std::vector<double> predict(const SeqCnnModel& model, std::span<const TrainingSample> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const TrainingSample& sample : samples) out.push_back(forward(model, view_of(model, sample)));
  return out;
}

double evaluate_mape(const SeqCnnModel& model, std::span<const TrainingSample> samples) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (const TrainingSample& sample : samples) {
    const double pred = forward(model, view_of(model, sample));
    total += mape_loss(pred, sample.trip->header.ata).loss;
  }
  return total / static_cast<double>(samples.size());
}

void adam_step(SeqCnnModel& model) {
  OptimizerState& opt = model.optimizer;
  const auto params = model.parameters();
  if (opt.first_moment.size() != params.size()) {
    opt.first_moment.clear();
    opt.second_moment.clear();
    for (const Tensor* p : params) {
      opt.first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      opt.second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  ++opt.step;
  const double t = static_cast<double>(opt.step);
  const double step_size = model.config.learning_rate * std::sqrt(1.0 - std::pow(kBeta2, t)) /
                           (1.0 - std::pow(kBeta1, t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    Matrix& m = opt.first_moment[i];
    Matrix& v = opt.second_moment[i];
    m = kBeta1 * m + (1.0 - kBeta1) * p.grad;
    v = kBeta2 * v + (1.0 - kBeta2) * p.grad.cwiseAbs2();
    p.value.array() -= step_size * m.array() / (v.array().sqrt() + kAdamEpsilon);
  }
}

void train(SeqCnnModel& model, std::span<const TrainingSample> training,
           std::span<const TrainingSample> validation, const EpochCallback& on_epoch) {
  if (training.empty()) throw ValidationError("seqcnn: empty training set");
  validate(model.config);
  Rng rng(derive_seed(model.config.seed, "shuffle"));

  model.history.clear();
  const auto record = [&](const EpochMetrics& metrics) {
    model.history.push_back(metrics);
    if (on_epoch) on_epoch(metrics);
  };
  record({0, evaluate_mape(model, training), evaluate_mape(model, validation)});

  std::vector<std::size_t> order(training.size());
  std::iota(order.begin(), order.end(), 0);
  ForwardTrace trace;
  for (int epoch = 1; epoch <= model.config.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[rng.below(i + 1)]);
    }
    for (std::size_t start = 0; start < order.size(); start += model.config.batch_size) {
      const std::size_t end = std::min(order.size(), start + model.config.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      model.zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const TrainingSample& sample = training[order[k]];
        double pred = 0.0;
        try {
          pred = forward(model, view_of(model, sample), &trace);
        } catch (const ValidationError& e) {
          throw ValidationError("seqcnn: training diverged at epoch " + std::to_string(epoch) +
                                ": " + e.what());
        }
        const LossValue loss = mape_loss(pred, sample.trip->header.ata);
        if (!std::isfinite(loss.loss)) {
          throw ValidationError("seqcnn: training diverged at epoch " + std::to_string(epoch));
        }
        backward(model, trace, loss.grad * inv_batch);
      }
      adam_step(model);
    }
    const double train_mape = evaluate_mape(model, training);
    if (!std::isfinite(train_mape)) {
      throw ValidationError("seqcnn: training diverged at epoch " + std::to_string(epoch));
    }
    record({epoch, train_mape, evaluate_mape(model, validation)});
  }
  model.zero_grad();
  model.trained = true;
}

}  // namespace etafuse::seqcnn

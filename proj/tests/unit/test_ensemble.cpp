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

#include "doctest.h"

#include <cmath>
#include <numeric>
#include <sstream>

#include "etafuse/ensemble.hpp"
#include "etafuse/error.hpp"
#include "etafuse/rng.hpp"
#include "../common/ensemble_oracle.hpp"

using namespace etafuse;
using namespace etafuse::ensemble;
using etafuse::testing::grid_oracle_mape;
using etafuse::testing::oracle_mape;

namespace {

// Noisy components around the targets, each with its own bias and spread.
PredictionMatrix noisy_components(const std::vector<double>& y, std::size_t k, Rng& rng) {
  PredictionMatrix p(k, std::vector<double>(y.size()));
  for (std::size_t c = 0; c < k; ++c) {
    const double bias = rng.uniform(-0.2, 0.2);
    const double spread = rng.uniform(0.02, 0.3);
    for (std::size_t i = 0; i < y.size(); ++i) p[c][i] = y[i] * (1.0 + bias + spread * rng.normal());
  }
  return p;
}

std::vector<double> targets(std::size_t n, Rng& rng) {
  std::vector<double> y(n);
  for (double& v : y) v = rng.uniform(100.0, 2000.0);
  return y;
}

void check_simplex(const std::vector<double>& w) {
  double s = 0.0;
  for (const double x : w) {
    CHECK(x >= 0.0);
    s += x;
  }
  CHECK(std::abs(s - 1.0) <= 1e-12);
}

}  // namespace

TEST_CASE("metrics by hand") {
  const std::vector<double> y{100, 200};
  CHECK(mape(y, std::vector<double>{90, 220}) == doctest::Approx(0.10).epsilon(1e-15));
  CHECK(mape(y, y) == 0.0);
  CHECK(mae(y, y) == 0.0);
  CHECK(mae(std::vector<double>{100}, std::vector<double>{150}) == 50.0);
  CHECK_THROWS_AS(mape(y, std::vector<double>{1}), ValidationError);
  CHECK_THROWS_AS(mape(std::vector<double>{}, std::vector<double>{}), ValidationError);
  CHECK_THROWS_AS(mape(std::vector<double>{0}, std::vector<double>{1}), ValidationError);
  CHECK_THROWS_AS(mae(y, std::vector<double>{1}), ValidationError);
  CHECK(mae(std::vector<double>{-5}, std::vector<double>{5}) == 10.0);
}

TEST_CASE("combine") {
  const PredictionMatrix p{{100}, {200}};
  CHECK(combine(p, std::vector<double>{0.25, 0.75})[0] == 175.0);
  const PredictionMatrix q{{1, 2, 3}, {4, 5, 6}};
  CHECK(combine(q, std::vector<double>{1.0, 0.0}) == q[0]);
  const PredictionMatrix same{{7, 8}, {7, 8}, {7, 8}};
  const auto b = combine(same, std::vector<double>{0.2, 0.3, 0.5});
  CHECK(b[0] == doctest::Approx(7.0).epsilon(1e-15));
  CHECK(b[1] == doctest::Approx(8.0).epsilon(1e-15));
  CHECK_THROWS_AS(combine(q, std::vector<double>{1.0}), ValidationError);
  CHECK_THROWS_AS(combine(q, std::vector<double>{0.5, 0.6}), ValidationError);
  CHECK_THROWS_AS(combine(q, std::vector<double>{1.5, -0.5}), ValidationError);
  CHECK_THROWS_AS(combine({{1, 2}, {3}}, std::vector<double>{0.5, 0.5}), ValidationError);
}

TEST_CASE("combine is linear") {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = 1 + rng.below(5);
    const auto y = targets(40, rng);
    const auto p = noisy_components(y, k, rng);
    std::vector<double> w(k);
    for (double& x : w) x = rng.uniform();
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= s;
    const auto b = combine(p, w);
    for (std::size_t i = 0; i < y.size(); ++i) {
      double expect = 0.0;
      for (std::size_t c = 0; c < k; ++c) expect += w[c] * p[c][i];
      CHECK(std::abs(b[i] - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
    }
  }
}

TEST_CASE("weight fitting edge cases") {
  const std::vector<double> y{100, 200, 300};
  CHECK(fit_weights({{90, 210, 280}}, y, Group::kTree) == std::vector<double>{1.0});
  const std::vector<double> row{90, 230, 280};
  CHECK(fit_weights({row, row}, y, Group::kNn) == std::vector<double>{0.5, 0.5});
  CHECK(fit_weights({row, row, row}, y, Group::kNn) ==
        std::vector<double>(3, 1.0 / 3.0));
}

TEST_CASE("complementary components") {
  // A is exact on the first half and 40% low on the rest; B is exact on the
  // second half and 60% high on the first. The blend error is linear in the
  // weight here, so the best blend equals A.
  const std::size_t n = 20;
  std::vector<double> y(n, 100.0);
  PredictionMatrix p(2, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    p[0][i] = i < n / 2 ? 100.0 : 60.0;
    p[1][i] = i < n / 2 ? 160.0 : 100.0;
  }
  CHECK(oracle_mape(y, p[0]) == doctest::Approx(0.20));
  CHECK(oracle_mape(y, p[1]) == doctest::Approx(0.30));
  auto w = fit_weights(p, y, Group::kTree);
  CHECK(mape(y, combine(p, w)) <= oracle_mape(y, p[0]));
  CHECK(mape(y, combine(p, w)) == doctest::Approx(grid_oracle_mape(p, y)).epsilon(1e-12));

  // Errors of opposite sign on the same rows cancel in a blend.
  for (std::size_t i = 0; i < n; ++i) {
    p[0][i] = i % 2 == 0 ? 100.0 : 60.0;
    p[1][i] = i % 2 == 0 ? 160.0 : 130.0;
  }
  CHECK(oracle_mape(y, p[0]) == doctest::Approx(0.20));
  CHECK(oracle_mape(y, p[1]) == doctest::Approx(0.45));
  w = fit_weights(p, y, Group::kTree);
  check_simplex(w);
  const double fitted = mape(y, combine(p, w));
  CHECK(fitted < 0.20);
  // The optimum is at weight 3/7 on A with MAPE 0.15 + 0.05 * 3/7; the
  // 0.02 grid misses it, so descent may land below the grid oracle.
  CHECK(fitted <= grid_oracle_mape(p, y) + 1e-4);
  CHECK(std::abs(fitted - (0.15 + 0.05 * 3.0 / 7.0)) <= 1e-4);
}

TEST_CASE("coordinate descent agrees with the grid oracle") {
  Rng rng(5);
  for (int t = 0; t < 40; ++t) {
    const std::size_t k = 1 + static_cast<std::size_t>(t % 3);
    const auto y = targets(60, rng);
    const auto p = noisy_components(y, k, rng);
    const auto w = fit_weights(p, y, t % 2 == 0 ? Group::kTree : Group::kNn);
    REQUIRE(w.size() == k);
    check_simplex(w);
    const double fitted = mape(y, combine(p, w));
    const double oracle = grid_oracle_mape(p, y);
    CAPTURE(t);
    CHECK(fitted <= oracle + 1e-4);
    CHECK(std::abs(fitted - grid_oracle_mape(p, y, 0.005)) <= 1e-4);
    for (const auto& row : p) CHECK(fitted <= oracle_mape(y, row));
  }
}

TEST_CASE("top-level blend weight") {
  const std::vector<double> y{100, 200, 400, 50};
  PredictionMatrix tree{{150, 300, 600, 75}};
  PredictionMatrix nn{{110, 220, 440, 55}};
  auto w = fit_ensemble({"t"}, tree, {"n"}, nn, y);
  CHECK(w.alpha == 0.0);
  w = fit_ensemble({"t"}, nn, {"n"}, tree, y);
  CHECK(w.alpha == 1.0);
  // Identical blends: every alpha ties and 0.5 wins.
  w = fit_ensemble({"t"}, nn, {"n"}, nn, y);
  CHECK(w.alpha == 0.5);
  // Symmetric errors cancel at 0.5.
  PredictionMatrix low{{90, 180, 360, 45}};
  w = fit_ensemble({"t"}, nn, {"n"}, low, y);
  CHECK(w.alpha == 0.5);
  CHECK(mape(y, apply_ensemble(w, nn, low)) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ensemble dominates every component") {
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto y = targets(80, rng);
    const auto tree = noisy_components(y, 2, rng);
    const auto nn = noisy_components(y, 1 + rng.below(8), rng);
    std::vector<std::string> nn_ids;
    for (std::size_t i = 0; i < nn.size(); ++i) nn_ids.push_back("n" + std::to_string(i));
    const EnsembleWeights w = fit_ensemble({"a", "b"}, tree, nn_ids, nn, y);
    check_simplex(w.tree_weights);
    check_simplex(w.nn_weights);
    CHECK(w.alpha >= 0.0);
    CHECK(w.alpha <= 1.0);
    const double final_mape = mape(y, apply_ensemble(w, tree, nn));
    for (const auto& row : tree) CHECK(final_mape <= mape(y, row));
    for (const auto& row : nn) CHECK(final_mape <= mape(y, row));
    CHECK(final_mape <= mape(y, combine(tree, w.tree_weights)));
    CHECK(final_mape <= mape(y, combine(nn, w.nn_weights)));
  }
}

TEST_CASE("weights and predictions files") {
  EnsembleWeights w;
  w.tree_ids = {"gbdt_a", "gbdt_b"};
  w.tree_weights = {0.3, 0.7};
  w.nn_ids = {"nn_d9_front"};
  w.nn_weights = {1.0};
  w.alpha = 0.41;
  std::ostringstream out;
  write_weights(out, w);
  std::istringstream in(out.str());
  CHECK(read_weights(in) == w);
  std::istringstream bad("eta-fuse-ensemble 9\n");
  CHECK_THROWS_AS(read_weights(bad), ValidationError);
  std::istringstream cut(out.str().substr(0, out.str().size() / 2));
  CHECK_THROWS_AS(read_weights(cut), ParseError);

  const std::vector<std::string> ids{"o1", "o2"};
  const std::vector<double> preds{612.25, 0.1};
  std::ostringstream p;
  write_predictions(p, ids, preds);
  CHECK(p.str() == "order_id,prediction\no1,612.25\no2,0.1\n");
  std::istringstream pin(p.str());
  const auto back = read_predictions(pin);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == std::pair<std::string, double>{"o1", 612.25});
  CHECK(back[1].second == 0.1);
}

TEST_CASE("report rows") {
  const std::vector<double> y{100, 200};
  const std::vector<double> eta{80, 260};
  const std::vector<std::string> tree_ids{"gbdt_a"};
  const std::vector<std::string> nn_ids{"nn_d9_front"};
  const PredictionMatrix tree{{90, 210}};
  const PredictionMatrix nn{{105, 190}};
  const Report bare = evaluate_report(y, eta, tree_ids, tree, nn_ids, nn, nullptr);
  REQUIRE(bare.rows.size() == 3);
  CHECK(bare.rows[0].model == "simple_eta");
  CHECK(bare.rows[0].mape == doctest::Approx(0.25));
  CHECK(bare.rows[0].mae == 40.0);

  const EnsembleWeights w = fit_ensemble(tree_ids, tree, nn_ids, nn, y);
  const Report full = evaluate_report(y, eta, tree_ids, tree, nn_ids, nn, &w);
  REQUIRE(full.rows.size() == 6);
  CHECK(full.rows[5].model == "ensemble");
  CHECK(full.rows[5].mape == mape(y, apply_ensemble(w, tree, nn)));
  const std::string csv = render_csv(full);
  CHECK(csv.rfind("model,mape,mae\nsimple_eta,", 0) == 0);
  CHECK(render_csv(full) == csv);
  CHECK(render_table(full).find("simple_eta") != std::string::npos);

  const std::vector<std::string> wrong{"other"};
  CHECK_THROWS_AS(evaluate_report(y, eta, wrong, tree, nn_ids, nn, &w), ValidationError);
}

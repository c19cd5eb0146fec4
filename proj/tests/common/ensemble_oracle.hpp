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

#ifndef ETAFUSE_TESTS_ENSEMBLE_ORACLE_HPP_
#define ETAFUSE_TESTS_ENSEMBLE_ORACLE_HPP_

#include <cmath>
#include <limits>
#include <vector>

namespace etafuse::testing {

inline double oracle_mape(const std::vector<double>& y, const std::vector<double>& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(p[i] - y[i]) / y[i];
  return s / static_cast<double>(y.size());
}

inline std::vector<double> oracle_blend(const std::vector<std::vector<double>>& rows,
                                        const std::vector<double>& w) {
  std::vector<double> out(rows[0].size(), 0.0);
  for (std::size_t c = 0; c < rows.size(); ++c) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[c] * rows[c][i];
  }
  return out;
}

// Best MAPE over the simplex grid with the given step (1, 2 or 3 components).
inline double grid_oracle_mape(const std::vector<std::vector<double>>& rows,
                               const std::vector<double>& y, double step = 0.02) {
  const int n = static_cast<int>(std::lround(1.0 / step));
  double best = std::numeric_limits<double>::infinity();
  if (rows.size() == 1) return oracle_mape(y, rows[0]);
  for (int i = 0; i <= n; ++i) {
    if (rows.size() == 2) {
      const double a = i * step;
      best = std::min(best, oracle_mape(y, oracle_blend(rows, {a, 1.0 - a})));
      continue;
    }
    for (int j = 0; i + j <= n; ++j) {
      const double a = i * step;
      const double b = j * step;
      best = std::min(best, oracle_mape(y, oracle_blend(rows, {a, b, 1.0 - a - b})));
    }
  }
  return best;
}

}  // namespace etafuse::testing

#endif  // ETAFUSE_TESTS_ENSEMBLE_ORACLE_HPP_

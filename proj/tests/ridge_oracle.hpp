// Copyright 2026 The RootProbe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ROOTPROBE_TESTS_RIDGE_ORACLE_HPP_
#define ROOTPROBE_TESTS_RIDGE_ORACLE_HPP_

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rootprobe::testing {

// Brute-force weighted ridge: forms the (p+1)x(p+1) normal matrix with an
// explicit penalty matrix diag(alpha, ..., alpha, 0) entry by entry and
// solves it with Gauss-Jordan elimination and partial pivoting. Shares no
// code with the library solver. Returns p coefficients followed by the
// intercept.
inline std::vector<double> brute_force_ridge(const std::vector<std::vector<double>>& design,
                                             const std::vector<double>& targets,
                                             const std::vector<double>& weights, double alpha) {
  const std::size_t n = design.size();
  const std::size_t p = n == 0 ? 0 : design[0].size();
  const std::size_t d = p + 1;
  auto feature = [&](std::size_t i, std::size_t j) { return j < p ? design[i][j] : 1.0; };

  std::vector<std::vector<double>> a(d, std::vector<double>(d + 1, 0.0));
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += weights[i] * feature(i, r) * feature(i, c);
      const double penalty = (r == c && r < p) ? alpha : 0.0;
      a[r][c] = sum + penalty;
    }
    double rhs = 0.0;
    for (std::size_t i = 0; i < n; ++i) rhs += weights[i] * feature(i, r) * targets[i];
    a[r][d] = rhs;
  }

  for (std::size_t col = 0; col < d; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < d; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-14) throw std::runtime_error("oracle: singular system");
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < d; ++r) {
      if (r == col) continue;
      const double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= d; ++c) a[r][c] -= factor * a[col][c];
    }
  }
  std::vector<double> solution(d);
  for (std::size_t r = 0; r < d; ++r) solution[r] = a[r][d] / a[r][r];
  return solution;
}

}  // namespace rootprobe::testing

#endif  // ROOTPROBE_TESTS_RIDGE_ORACLE_HPP_

// Copyright 2026 The tvsq Authors
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

#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>

namespace tvsq {

/// Root radius of the characteristic polynomial
///   z^r - f_1 z^{r-1} - ... - f_r,
/// i.e. the largest modulus among the poles of the all-pole part of
/// 1 / (1 - sum_d f_d z^{-d}). The filter (and every gradient recursion that
/// shares its denominator) is stable iff the result is < 1.
///
/// Trailing zero coefficients contribute roots at the origin and are dropped
/// before the companion-matrix eigen decomposition, so f = 0 yields exactly 0.
inline double spectral_radius(std::span<const double> f) {
  std::size_t degree = f.size();
  while (degree > 0 && f[degree - 1] == 0.0) --degree;
  if (degree == 0) return 0.0;
  if (degree == 1) return std::abs(f[0]);

  const auto n = static_cast<Eigen::Index>(degree);
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) companion(0, j) = f[j];
  for (Eigen::Index i = 1; i < n; ++i) companion(i, i - 1) = 1.0;

  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) {
    return std::numeric_limits<double>::infinity();
  }
  const auto& roots = solver.eigenvalues();
  double rho = 0.0;
  for (Eigen::Index i = 0; i < roots.size(); ++i) {
    rho = std::max(rho, std::abs(roots[i]));
  }
  return rho;
}

}  // namespace tvsq

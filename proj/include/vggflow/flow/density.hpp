// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "vggflow/flow/field.hpp"

namespace vggflow::flow {

inline constexpr double kDivergenceStep = 1e-4;

/// Central-difference divergence of v at every row of `x`.
std::vector<double> divergence_fd(const VelocityField& v, const Tensor& x, std::span<const double> t,
                                  double eps = kDivergenceStep);
double divergence_fd(const VelocityField& v, std::span<const double> x, double t, double eps = kDivergenceStep);

struct DensityResult {
  Tensor x0;
  std::vector<double> log_density;
  /// Integral of the divergence from 0 to the start time, per row.
  std::vector<double> divergence_integral;
};

/// log p_t(x) for the pushforward of N(0, I) under v, integrating the state
/// backward from `t_start` to 0 with rk4 and accumulating the divergence with
/// the trapezoid rule on the same grid.
DensityResult log_density_at(const VelocityField& v, const Tensor& x, double t_start, std::size_t n_steps,
                             double eps = kDivergenceStep);

inline DensityResult log_density(const VelocityField& v, const Tensor& x1, std::size_t n_steps,
                                 double eps = kDivergenceStep) {
  return log_density_at(v, x1, 1.0, n_steps, eps);
}

/// Row-wise log N(x; 0, I).
std::vector<double> standard_normal_log_density(const Tensor& x);

}  // namespace vggflow::flow

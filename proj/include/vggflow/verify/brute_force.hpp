// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vggflow/verify/lq.hpp"

namespace vggflow::verify {

struct BruteForceConfig {
  std::size_t iters = 20000;
  /// Converged once max |∂J/∂u_i| / Δt falls below this.
  double tolerance = 1e-11;
  std::size_t max_backtracks = 60;
  double armijo = 1e-4;
};

struct BruteForceResult {
  /// Control on step i, `[n_steps, d]`.
  Tensor controls;
  /// x_0 .. x_N, `[n_steps + 1, d]`.
  Tensor states;
  double objective = 0.0;
  /// Objective after every accepted iteration, starting with u = 0.
  std::vector<double> history;
  std::size_t iterations = 0;
};

/// Open-loop minimization of Σ (λ/2)‖u_i‖²Δt - r(x_N) over controls held
/// constant on each step, with the dynamics ẋ = A·x + u integrated exactly.
/// Preconditioned gradient descent with Armijo backtracking; gradients come
/// from the discrete adjoint. Stops once an accepted step no longer lowers
/// the objective.
BruteForceResult brute_force_control(const LqProblem& prob, std::span<const double> x0, std::size_t n_steps,
                                     const BruteForceConfig& cfg = {});

/// RMS over steps and coordinates of u_i + β·mean(g(x_i, t_i), g(x_{i+1}, t_{i+1}))
/// with g = P·x + q: the gap between the open-loop optimum and the feedback
/// law, averaged over each step.
double feedback_gap_rms(const LqProblem& prob, const RiccatiSolution& sol, const BruteForceResult& result);

}  // namespace vggflow::verify

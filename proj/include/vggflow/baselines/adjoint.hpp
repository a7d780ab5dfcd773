// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vggflow/flow/sampler.hpp"
#include "vggflow/rewards/reward.hpp"

namespace vggflow::baselines {

/// Costates on the grid of a forward trajectory; costates[i] pairs with
/// forward.states[i] and times[i].
struct AdjointTrajectory {
  std::vector<double> times;
  std::vector<Tensor> costates;
  flow::Trajectory forward;

  const Tensor& at(std::size_t step) const { return costates.at(step); }
};

inline constexpr double kAdjointStep = 1e-4;

/// Backward Euler sweep of ȧ = -∇_x H with
///   H(x, t, a) = (λ/2)‖v(x, t) - v_base(x, t)‖² + aᵀv(x, t),
/// starting from a(1) = -∇r(x₁). ∇_x H is taken by coordinate central
/// differences of the scalar H with step `fd_step`; a is held fixed.
AdjointTrajectory pmp_adjoint_solve(const flow::Trajectory& traj, const flow::VelocityField& policy,
                                    const flow::VelocityField& base, const rewards::RewardSpec& reward, double lambda,
                                    double fd_step = kAdjointStep);

/// Backward Euler sweep of ȧ = -[∇_x v_base]ᵀa from a(1) = -∇r(x₁).
AdjointTrajectory lean_adjoint_solve(const flow::Trajectory& traj, const flow::VelocityField& base,
                                     const rewards::RewardSpec& reward, double fd_step = kAdjointStep);

}  // namespace vggflow::baselines

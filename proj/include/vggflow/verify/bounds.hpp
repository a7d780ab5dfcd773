// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "vggflow/flow/field.hpp"
#include "vggflow/numcore/rng.hpp"

namespace vggflow::verify {

inline constexpr std::size_t kLipschitzProbes = 1024;

/// Spatial Lipschitz constant of `v`: the exact operator norm for a
/// LinearField, otherwise twice the largest ‖v(x,t) - v(y,t)‖/‖x - y‖ over
/// random probe pairs.
double lipschitz_estimate(const flow::VelocityField& v, Rng& rng, std::size_t n_probes = kLipschitzProbes);

struct W2Bound {
  /// E‖x₁ - y₁‖² for x₀ = y₀ pushed by the two fields.
  double lhs = 0.0;
  /// e^{2L+1}·∫E_{p_t}‖ṽ‖²dt along the finetuned flow.
  double rhs = 0.0;
  double lipschitz = 0.0;
  bool holds = true;
};

/// Both sides of the W2 bound with rk4 trajectories and trapezoid time
/// integration; `lipschitz` defaults to lipschitz_estimate(v_base).
W2Bound w2_bound_check(const flow::VelocityField& v_theta, const flow::VelocityField& v_base, std::size_t n_samples,
                       std::size_t n_steps, Rng& rng, std::optional<double> lipschitz = std::nullopt);

}  // namespace vggflow::verify

// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

#include "vggflow/align/transitions.hpp"
#include "vggflow/align/value_gradient.hpp"

namespace vggflow::align {

enum class ConsistencyMode { Partial, PaperC1 };

std::string to_string(ConsistencyMode m);
ConsistencyMode parse_consistency_mode(std::string_view name);

struct ResidualOptions {
  double eps = 1e-3;
  double beta = 1.0;
  ConsistencyMode mode = ConsistencyMode::Partial;
  /// Current field, needed only by the paper_c1 displaced time difference.
  const flow::VelocityField* current = nullptr;
};

/// Finite-difference residual of the gradient consistency equation
///   ∂_t g + [∇g](v_base - βg) + [∇v_base]ᵀ g = 0
/// at every row, recorded on `tape` (one row per point, `[n, d]`).
///
/// Partial mode:
///   T1 = (g(x, t+ε) - g(x, t)) / ε
///   T2 = (g(x + εw, t) - g(x - εw, t)) / 2ε,  w = v_base(x, t) - βg(x, t)
///   T3 = ∇_x(u·v_base)(x) by coordinate central differences, u = g(x, t)
/// PaperC1 mode uses T1 = (g(x + ε v(x, t), t+ε) - g(x, t)) / ε with the
/// current field v, and T3 = (v_base(x + εu) - v_base(x - εu)) / 2ε.
/// Directions w and u and all v evaluations are constants.
///
/// `eps` holds one step per row; every row needs t + ε <= 1.
Var consistency_residual(Tape& tape, const GradientModel& g, const flow::VelocityField& v_base, const Tensor& x,
                         std::span<const double> t, std::span<const double> eps, const ResidualOptions& opts);

/// Value of the residual with a single ε; throws ValidationError when t + ε > 1.
Tensor consistency_residual(const GradientModel& g, const flow::VelocityField& v_base, const Tensor& x,
                            std::span<const double> t, const ResidualOptions& opts);

/// min(ε, 1 - t) per row.
std::vector<double> shrink_eps(std::span<const double> t, double eps);

struct LossResult {
  double value = 0.0;
  GradMap theta;
  GradMap phi;
};

inline constexpr std::string_view kThetaPrefix = "theta.";
inline constexpr std::string_view kPhiPrefix = "phi.";

/// Everything a loss needs to know about the current models.
struct LossContext {
  const flow::FinetunedField& policy;
  const ValueGradientField& gfield;
  double clip_norm = kNoClip;
};

/// Mean ‖R‖² over the transitions; gradients flow into φ only.
LossResult consistency_loss(const LossContext& ctx, const TransitionBatch& batch, const ResidualOptions& opts);

/// Mean ‖g(x₁, 1) + ∇r(x₁)‖² over the terminals, with the leading term
/// unclipped; gradients flow into φ only.
LossResult boundary_loss(const LossContext& ctx, const Tensor& terminals);

/// Weighted sum consistency + α·boundary with one combined gradient.
struct ValueLosses {
  double consistency = 0.0;
  double boundary = 0.0;
  GradMap phi;
  GradMap theta;
};
ValueLosses value_losses(const LossContext& ctx, const TransitionBatch& batch, const ResidualOptions& opts, double alpha);

/// Mean ‖ṽ_θ(x, t) + β·target‖² where `target` is a constant `[n, d]`;
/// gradients flow into θ only.
LossResult residual_matching_loss(const flow::FinetunedField& policy, const Tensor& x, std::span<const double> t,
                                  const Tensor& target, double beta);

/// residual_matching_loss with target g_φ(x, t), held constant.
LossResult matching_loss(const LossContext& ctx, const TransitionBatch& batch, double beta);

}  // namespace vggflow::align

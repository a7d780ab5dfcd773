// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/align/losses.hpp"

#include <algorithm>
#include <cmath>

#include "vggflow/numcore/errors.hpp"

namespace vggflow::align {

std::string to_string(ConsistencyMode m) { return m == ConsistencyMode::PaperC1 ? "paper_c1" : "partial"; }

ConsistencyMode parse_consistency_mode(std::string_view name) {
  if (name == "partial") return ConsistencyMode::Partial;
  if (name == "paper_c1") return ConsistencyMode::PaperC1;
  throw ValidationError("unknown consistency mode '" + std::string(name) + "'");
}

std::vector<double> shrink_eps(std::span<const double> t, double eps) {
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = std::min(eps, 1.0 - t[i]);
  return out;
}

namespace {

void check_points(const Tensor& x, std::span<const double> t, std::size_t dim) {
  if (x.rank() != 2 || x.cols() != dim || x.rows() == 0) {
    throw ValidationError("residual: points have shape " + shape_string(x.shape()) + ", expected [n, " +
                          std::to_string(dim) + "]");
  }
  if (t.size() != x.rows()) throw ValidationError("residual: one time per point required");
}

// Rows of `x` displaced by s * scale[i] * dir(i, :).
Tensor displaced(const Tensor& x, const Tensor& dir, std::span<const double> scale, double s) {
  Tensor out = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) += s * scale[i] * dir(i, j);
  return out;
}

// Copies `block` into rows [offset, offset + block.rows()) of `dst`.
void place(Tensor& dst, std::size_t offset, const Tensor& block) {
  std::copy(block.data().begin(), block.data().end(), dst.data().begin() + static_cast<std::ptrdiff_t>(offset * dst.cols()));
}

// [∇v_base]ᵀu per row via central differences of the scalar u·v_base.
Tensor transpose_jacobian_product(const flow::VelocityField& v_base, const Tensor& x, std::span<const double> t,
                                  const Tensor& u, std::span<const double> eps) {
  const std::size_t n = x.rows(), d = x.cols();
  Tensor probes = Tensor::zeros(2 * d * n, d);
  std::vector<double> times(2 * d * n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t up = (2 * j) * n + i, down = (2 * j + 1) * n + i;
      for (std::size_t k = 0; k < d; ++k) probes(up, k) = probes(down, k) = x(i, k);
      probes(up, j) += eps[i];
      probes(down, j) -= eps[i];
      times[up] = times[down] = t[i];
    }
  }
  const Tensor vals = v_base.eval(probes, times);
  Tensor out = Tensor::zeros(n, d);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += u(i, k) * (vals((2 * j) * n + i, k) - vals((2 * j + 1) * n + i, k));
      out(i, j) = s / (2.0 * eps[i]);
    }
  }
  return out;
}

// (v_base(x + εu) - v_base(x - εu)) / 2ε per row.
Tensor directional_jacobian_product(const flow::VelocityField& v_base, const Tensor& x, std::span<const double> t,
                                    const Tensor& u, std::span<const double> eps) {
  const std::size_t n = x.rows();
  Tensor probes = Tensor::zeros(2 * n, x.cols());
  place(probes, 0, displaced(x, u, eps, 1.0));
  place(probes, n, displaced(x, u, eps, -1.0));
  std::vector<double> times(t.begin(), t.end());
  times.insert(times.end(), t.begin(), t.end());
  const Tensor vals = v_base.eval(probes, times);
  Tensor out = Tensor::zeros(n, x.cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < x.cols(); ++k) out(i, k) = (vals(i, k) - vals(n + i, k)) / (2.0 * eps[i]);
  return out;
}

void register_params(Tape& tape, const ParamSet& params, std::string_view prefix) {
  for (const auto& [name, value] : params) tape.param(std::string(prefix) + name, value);
}

void register_models(Tape& tape, const LossContext& ctx) {
  register_params(tape, ctx.policy.residual().params(), kThetaPrefix);
  register_params(tape, ctx.gfield.correction().params(), kPhiPrefix);
}

LossResult split(double value, const GradMap& grads) {
  return {value, nets::strip_prefix(grads, std::string(kThetaPrefix)), nets::strip_prefix(grads, std::string(kPhiPrefix))};
}

Var mean_row_square(Tape& tape, Var rows, std::size_t n) {
  return tape.scale(tape.sum(tape.square(rows)), 1.0 / static_cast<double>(n));
}

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw NumericalError(std::string(what) + " is not finite");
}

Var record_consistency(Tape& tape, const LossContext& ctx, const TransitionBatch& batch, const ResidualOptions& opts) {
  const BoundValueGradient g(ctx.gfield, ctx.policy, ctx.clip_norm, std::string(kPhiPrefix));
  ResidualOptions local = opts;
  local.current = &ctx.policy;
  const auto eps = shrink_eps(batch.times, opts.eps);
  Var residual = consistency_residual(tape, g, ctx.policy.base(), batch.states, batch.times, eps, local);
  return mean_row_square(tape, residual, batch.size());
}

Var record_boundary(Tape& tape, const LossContext& ctx, const Tensor& terminals) {
  const std::vector<double> ones(terminals.rows(), 1.0);
  Var g = ctx.gfield.record(tape, ctx.policy, terminals, ones, kNoClip, std::string(kPhiPrefix));
  const Tensor target = kernels::scale(rewards::reward_grad(ctx.gfield.reward(), terminals), -1.0);
  return tape.scale(tape.squared_distance(g, tape.constant(target)), 1.0 / static_cast<double>(terminals.rows()));
}

}  // namespace

Var consistency_residual(Tape& tape, const GradientModel& g, const flow::VelocityField& v_base, const Tensor& x,
                         std::span<const double> t, std::span<const double> eps, const ResidualOptions& opts) {
  const std::size_t n = x.rows(), d = g.dim();
  check_points(x, t, d);
  if (v_base.dim() != d) throw ValidationError("residual: base field and value gradient dims differ");
  if (eps.size() != n) throw ValidationError("residual: one step per point required");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(eps[i] > 0.0)) throw ValidationError("residual: finite-difference step must be positive");
    if (t[i] + eps[i] > 1.0 + 1e-12) throw ValidationError("residual: t + eps exceeds 1; shrink eps near the terminal time");
  }
  if (opts.mode == ConsistencyMode::PaperC1 && opts.current == nullptr) {
    throw ValidationError("residual: paper_c1 mode needs the current field");
  }

  const Tensor g0 = g.eval(x, t);
  Tensor w = v_base.eval(x, t);
  kernels::axpy(w, -opts.beta, g0);

  std::vector<double> later(n);
  for (std::size_t i = 0; i < n; ++i) later[i] = std::min(1.0, t[i] + eps[i]);
  Tensor shifted = x;
  if (opts.mode == ConsistencyMode::PaperC1) shifted = displaced(x, opts.current->eval(x, t), eps, 1.0);

  // Rows: g(x, t) | g(shifted, t+ε) | g(x + εw, t) | g(x - εw, t).
  Tensor stacked = Tensor::zeros(4 * n, d);
  place(stacked, 0, x);
  place(stacked, n, shifted);
  place(stacked, 2 * n, displaced(x, w, eps, 1.0));
  place(stacked, 3 * n, displaced(x, w, eps, -1.0));
  std::vector<double> times;
  times.reserve(4 * n);
  times.insert(times.end(), t.begin(), t.end());
  times.insert(times.end(), later.begin(), later.end());
  times.insert(times.end(), t.begin(), t.end());
  times.insert(times.end(), t.begin(), t.end());
  Var values = g.record(tape, stacked, times);

  Tensor combine = Tensor::zeros(n, 4 * n);
  for (std::size_t i = 0; i < n; ++i) {
    combine(i, i) = -1.0 / eps[i];
    combine(i, n + i) = 1.0 / eps[i];
    combine(i, 2 * n + i) = 0.5 / eps[i];
    combine(i, 3 * n + i) = -0.5 / eps[i];
  }
  const Tensor third = opts.mode == ConsistencyMode::Partial ? transpose_jacobian_product(v_base, x, t, g0, eps)
                                                              : directional_jacobian_product(v_base, x, t, g0, eps);
  return tape.add(tape.matmul(tape.constant(std::move(combine)), values), tape.constant(third));
}

Tensor consistency_residual(const GradientModel& g, const flow::VelocityField& v_base, const Tensor& x,
                            std::span<const double> t, const ResidualOptions& opts) {
  Tape tape;
  const std::vector<double> eps(t.size(), opts.eps);
  return tape.value(consistency_residual(tape, g, v_base, x, t, eps, opts));
}

LossResult consistency_loss(const LossContext& ctx, const TransitionBatch& batch, const ResidualOptions& opts) {
  if (batch.size() == 0) throw ValidationError("consistency loss: empty batch");
  Tape tape;
  register_models(tape, ctx);
  Var loss = record_consistency(tape, ctx, batch, opts);
  require_finite(tape.value(loss).item(), "consistency loss");
  return split(tape.value(loss).item(), backward(tape, loss));
}

LossResult boundary_loss(const LossContext& ctx, const Tensor& terminals) {
  if (terminals.rank() != 2 || terminals.rows() == 0) throw ValidationError("boundary loss: no terminal states");
  Tape tape;
  register_models(tape, ctx);
  Var loss = record_boundary(tape, ctx, terminals);
  require_finite(tape.value(loss).item(), "boundary loss");
  return split(tape.value(loss).item(), backward(tape, loss));
}

ValueLosses value_losses(const LossContext& ctx, const TransitionBatch& batch, const ResidualOptions& opts, double alpha) {
  if (batch.size() == 0) throw ValidationError("consistency loss: empty batch");
  Tape tape;
  register_models(tape, ctx);
  Var consistency = record_consistency(tape, ctx, batch, opts);
  Var boundary = record_boundary(tape, ctx, batch.terminals);
  Var total = tape.add(consistency, tape.scale(boundary, alpha));
  ValueLosses out{tape.value(consistency).item(), tape.value(boundary).item(), {}, {}};
  require_finite(out.consistency, "consistency loss");
  require_finite(out.boundary, "boundary loss");
  const LossResult grads = split(0.0, backward(tape, total));
  out.phi = grads.phi;
  out.theta = grads.theta;
  return out;
}

LossResult residual_matching_loss(const flow::FinetunedField& policy, const Tensor& x, std::span<const double> t,
                                  const Tensor& target, double beta) {
  if (x.rank() != 2 || x.rows() == 0) throw ValidationError("matching loss: empty batch");
  if (target.shape() != x.shape()) throw ValidationError("matching loss: target shape differs from the points");
  Tape tape;
  register_params(tape, policy.residual().params(), kThetaPrefix);
  Var residual = policy.record_residual(tape, tape.constant(x), t, std::string(kThetaPrefix));
  Var loss = tape.scale(tape.squared_distance(residual, tape.constant(kernels::scale(target, -beta))),
                        1.0 / static_cast<double>(x.rows()));
  require_finite(tape.value(loss).item(), "matching loss");
  return split(tape.value(loss).item(), backward(tape, loss));
}

LossResult matching_loss(const LossContext& ctx, const TransitionBatch& batch, double beta) {
  if (batch.size() == 0) throw ValidationError("matching loss: empty batch");
  Tape tape;
  register_models(tape, ctx);
  Var g = tape.stop_gradient(
      ctx.gfield.record(tape, ctx.policy, batch.states, batch.times, ctx.clip_norm, std::string(kPhiPrefix)));
  Var residual = ctx.policy.record_residual(tape, tape.constant(batch.states), batch.times, std::string(kThetaPrefix));
  Var loss = mean_row_square(tape, tape.add(residual, tape.scale(g, beta)), batch.size());
  require_finite(tape.value(loss).item(), "matching loss");
  return split(tape.value(loss).item(), backward(tape, loss));
}

}  // namespace vggflow::align

// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/baselines/adjoint.hpp"

#include <cmath>
#include <functional>

#include "vggflow/numcore/errors.hpp"

namespace vggflow::baselines {

namespace {

void check_grid(const flow::Trajectory& traj, std::size_t dim) {
  if (traj.times.size() < 2 || traj.states.size() != traj.times.size()) {
    throw ValidationError("adjoint: trajectory grid and states disagree");
  }
  if (traj.terminal().cols() != dim) throw ValidationError("adjoint: trajectory and field dims differ");
}

// Per-row scalar H evaluated on a batch of probe points.
using Hamiltonian = std::function<std::vector<double>(const Tensor& probes, std::span<const double> t,
                                                      const Tensor& costate)>;

// ∇_x H per row by coordinate central differences; probes are batched as
// [+e₀ rows, -e₀ rows, +e₁ rows, ...].
Tensor hamiltonian_gradient(const Hamiltonian& h, const Tensor& x, double t, const Tensor& a, double step) {
  const std::size_t n = x.rows(), d = x.cols();
  Tensor probes = Tensor::zeros(2 * d * n, d);
  Tensor costate = Tensor::zeros(2 * d * n, d);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t s = 0; s < 2; ++s) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = (2 * j + s) * n + i;
        for (std::size_t k = 0; k < d; ++k) {
          probes(r, k) = x(i, k);
          costate(r, k) = a(i, k);
        }
        probes(r, j) += s == 0 ? step : -step;
      }
    }
  }
  const auto values = h(probes, flow::repeat_time(2 * d * n, t), costate);
  Tensor grad = Tensor::zeros(n, d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < n; ++i) grad(i, j) = (values[2 * j * n + i] - values[(2 * j + 1) * n + i]) / (2.0 * step);
  return grad;
}

AdjointTrajectory sweep(const flow::Trajectory& traj, const rewards::RewardSpec& reward, const Hamiltonian& h,
                        double step) {
  if (!(step > 0.0)) throw ValidationError("adjoint: finite-difference step must be positive");
  const std::size_t n_steps = traj.steps();
  AdjointTrajectory out{traj.times, std::vector<Tensor>(n_steps + 1), traj};
  out.costates[n_steps] = kernels::scale(rewards::reward_grad(reward, traj.terminal()), -1.0);
  for (std::size_t i = n_steps; i-- > 0;) {
    const Tensor& a = out.costates[i + 1];
    const Tensor grad = hamiltonian_gradient(h, traj.states[i + 1], traj.times[i + 1], a, step);
    Tensor next = a;
    kernels::axpy(next, traj.times[i + 1] - traj.times[i], grad);
    if (!next.all_finite()) throw NumericalError("adjoint: non-finite costate", static_cast<std::ptrdiff_t>(i));
    out.costates[i] = std::move(next);
  }
  return out;
}

std::vector<double> row_dots(const Tensor& a, const Tensor& b) {
  const Tensor dots = kernels::row_dot(a, b);
  return {dots.data().begin(), dots.data().end()};
}

}  // namespace

AdjointTrajectory pmp_adjoint_solve(const flow::Trajectory& traj, const flow::VelocityField& policy,
                                    const flow::VelocityField& base, const rewards::RewardSpec& reward, double lambda,
                                    double fd_step) {
  if (policy.dim() != base.dim()) throw ValidationError("adjoint: policy and base dims differ");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("adjoint: lambda must be finite and >= 0");
  check_grid(traj, policy.dim());
  const Hamiltonian h = [&](const Tensor& x, std::span<const double> t, const Tensor& a) {
    const Tensor v = policy.eval(x, t);
    const Tensor residual = kernels::sub(v, base.eval(x, t));
    auto values = row_dots(a, v);
    const auto squares = row_dots(residual, residual);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += 0.5 * lambda * squares[i];
    return values;
  };
  return sweep(traj, reward, h, fd_step);
}

AdjointTrajectory lean_adjoint_solve(const flow::Trajectory& traj, const flow::VelocityField& base,
                                     const rewards::RewardSpec& reward, double fd_step) {
  check_grid(traj, base.dim());
  const Hamiltonian h = [&](const Tensor& x, std::span<const double> t, const Tensor& a) {
    return row_dots(a, base.eval(x, t));
  };
  return sweep(traj, reward, h, fd_step);
}

}  // namespace vggflow::baselines

// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/flow/density.hpp"

#include <cmath>
#include <numbers>

#include "vggflow/flow/sampler.hpp"
#include "vggflow/numcore/errors.hpp"

namespace vggflow::flow {

std::vector<double> divergence_fd(const VelocityField& v, const Tensor& x, std::span<const double> t, double eps) {
  if (!(eps > 0.0)) throw ValidationError("divergence: step must be positive");
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> div(n, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    Tensor up = x, down = x;
    for (std::size_t i = 0; i < n; ++i) {
      up(i, j) += eps;
      down(i, j) -= eps;
    }
    const Tensor vu = v.eval(up, t), vd = v.eval(down, t);
    for (std::size_t i = 0; i < n; ++i) div[i] += (vu(i, j) - vd(i, j)) / (2.0 * eps);
  }
  return div;
}

double divergence_fd(const VelocityField& v, std::span<const double> x, double t, double eps) {
  return divergence_fd(v, Tensor::row(x), std::span<const double>(&t, 1), eps).front();
}

std::vector<double> standard_normal_log_density(const Tensor& x) {
  const double log_norm = -0.5 * static_cast<double>(x.cols()) * std::log(2.0 * std::numbers::pi);
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double sq = 0.0;
    for (double value : x.row_span(i)) sq += value * value;
    out[i] = log_norm - 0.5 * sq;
  }
  return out;
}

DensityResult log_density_at(const VelocityField& v, const Tensor& x, double t_start, std::size_t n_steps, double eps) {
  if (!(t_start >= 0.0 && t_start <= 1.0)) throw ValidationError("log_density: start time must lie in [0, 1]");
  if (n_steps < 1) throw ValidationError("log_density: n_steps must be >= 1");
  if (x.rank() != 2 || x.cols() != v.dim()) throw ValidationError("log_density: point dims do not match the field");
  const std::size_t n = x.rows();
  // Keep the step length of the full-interval grid.
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::round(static_cast<double>(n_steps) * t_start)));
  const double dt = t_start / static_cast<double>(steps);

  DensityResult result{x, {}, std::vector<double>(n, 0.0)};
  Tensor& state = result.x0;
  double t = t_start;
  std::vector<double> div_prev = divergence_fd(v, state, repeat_time(n, t), eps);
  for (std::size_t k = 0; k < steps && t_start > 0.0; ++k) {
    state = integrator_step(v, state, t, -dt, Integrator::Rk4);
    t = t_start - dt * static_cast<double>(k + 1);
    if (k + 1 == steps) t = 0.0;
    if (!state.all_finite()) throw NumericalError("log_density: non-finite state", static_cast<std::ptrdiff_t>(k + 1));
    std::vector<double> div = divergence_fd(v, state, repeat_time(n, t), eps);
    for (std::size_t i = 0; i < n; ++i) {
      result.divergence_integral[i] += 0.5 * dt * (div_prev[i] + div[i]);
      if (!std::isfinite(div[i])) throw NumericalError("log_density: non-finite divergence", static_cast<std::ptrdiff_t>(k + 1));
    }
    div_prev = std::move(div);
  }
  result.log_density = standard_normal_log_density(state);
  for (std::size_t i = 0; i < n; ++i) result.log_density[i] -= result.divergence_integral[i];
  return result;
}

}  // namespace vggflow::flow

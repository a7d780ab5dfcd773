// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/flow/sampler.hpp"

#include <cstdio>
#include <fstream>

#include "vggflow/numcore/errors.hpp"

namespace vggflow::flow {

std::string to_string(Integrator i) { return i == Integrator::Rk4 ? "rk4" : "euler"; }

Integrator parse_integrator(std::string_view name) {
  if (name == "euler") return Integrator::Euler;
  if (name == "rk4") return Integrator::Rk4;
  throw ValidationError("unknown integrator '" + std::string(name) + "'");
}

void SamplerConfig::validate() const {
  if (n_steps < 1) throw ValidationError("sampler: n_steps must be >= 1");
}

Tensor integrator_step(const VelocityField& v, const Tensor& x, double t, double dt, Integrator integrator) {
  const Tensor k1 = v.eval_at(x, t);
  Tensor next = x;
  if (integrator == Integrator::Euler) {
    kernels::axpy(next, dt, k1);
    return next;
  }
  Tensor probe = x;
  kernels::axpy(probe, 0.5 * dt, k1);
  const Tensor k2 = v.eval_at(probe, t + 0.5 * dt);
  probe = x;
  kernels::axpy(probe, 0.5 * dt, k2);
  const Tensor k3 = v.eval_at(probe, t + 0.5 * dt);
  probe = x;
  kernels::axpy(probe, dt, k3);
  const Tensor k4 = v.eval_at(probe, t + dt);
  kernels::axpy(next, dt / 6.0, k1);
  kernels::axpy(next, dt / 3.0, k2);
  kernels::axpy(next, dt / 3.0, k3);
  kernels::axpy(next, dt / 6.0, k4);
  return next;
}

namespace {

double grid_time(std::size_t i, std::size_t n) { return i == n ? 1.0 : static_cast<double>(i) / static_cast<double>(n); }

void check_start(const VelocityField& v, const Tensor& x0) {
  if (x0.rank() != 2 || x0.cols() != v.dim()) {
    throw ValidationError("integrate: initial states have shape " + shape_string(x0.shape()) + ", field has dim " +
                          std::to_string(v.dim()));
  }
  if (!x0.all_finite()) throw NumericalError("integrate: non-finite initial state", 0);
}

}  // namespace

Trajectory integrate(const VelocityField& v, const Tensor& x0, const SamplerConfig& cfg) {
  cfg.validate();
  check_start(v, x0);
  const std::size_t n = cfg.n_steps;
  const double dt = 1.0 / static_cast<double>(n);
  Trajectory traj;
  traj.times.reserve(n + 1);
  traj.states.reserve(n + 1);
  traj.velocities.reserve(n);
  traj.times.push_back(0.0);
  traj.states.push_back(x0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = traj.times.back();
    const Tensor& x = traj.states.back();
    Tensor vel = v.eval_at(x, t);
    Tensor next;
    if (cfg.integrator == Integrator::Euler) {
      next = x;
      kernels::axpy(next, dt, vel);
    } else {
      next = integrator_step(v, x, t, dt, Integrator::Rk4);
    }
    if (!next.all_finite()) throw NumericalError("integrate: non-finite state at step " + std::to_string(i + 1), static_cast<std::ptrdiff_t>(i + 1));
    traj.velocities.push_back(std::move(vel));
    traj.states.push_back(std::move(next));
    traj.times.push_back(grid_time(i + 1, n));
  }
  return traj;
}

Tensor integrate_endpoint(const VelocityField& v, const Tensor& x0, const SamplerConfig& cfg) {
  cfg.validate();
  check_start(v, x0);
  return transport(v, x0, 0.0, 1.0, cfg.n_steps, cfg.integrator);
}

Tensor transport(const VelocityField& v, Tensor x, double t_from, double t_to, std::size_t n_steps, Integrator integrator) {
  if (n_steps < 1) throw ValidationError("transport: n_steps must be >= 1");
  const double dt = (t_to - t_from) / static_cast<double>(n_steps);
  for (std::size_t i = 0; i < n_steps; ++i) {
    const double t = t_from + dt * static_cast<double>(i);
    x = integrator_step(v, x, t, dt, integrator);
    if (!x.all_finite()) throw NumericalError("transport: non-finite state at step " + std::to_string(i + 1), static_cast<std::ptrdiff_t>(i + 1));
  }
  return x;
}

void write_samples_csv(const std::filesystem::path& path, const Tensor& samples) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write samples to " + path.string());
  for (std::size_t j = 0; j < samples.cols(); ++j) out << (j ? ",x" : "x") << j;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    for (std::size_t j = 0; j < samples.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", samples(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace vggflow::flow

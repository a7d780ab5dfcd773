// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "vggflow/flow/field.hpp"

namespace vggflow::flow {

enum class Integrator { Euler, Rk4 };

std::string to_string(Integrator i);
Integrator parse_integrator(std::string_view name);

struct SamplerConfig {
  std::size_t n_steps = 20;
  Integrator integrator = Integrator::Euler;

  void validate() const;
};

/// A batch of trajectories on a shared uniform grid. `states[i]` is the
/// `[n, d]` batch at `times[i]`; `velocities[i]` is v(states[i], times[i])
/// for every step i < n_steps.
struct Trajectory {
  std::vector<double> times;
  std::vector<Tensor> states;
  std::vector<Tensor> velocities;

  std::size_t steps() const noexcept { return times.empty() ? 0 : times.size() - 1; }
  std::size_t batch() const { return states.front().rows(); }
  const Tensor& initial() const { return states.front(); }
  const Tensor& terminal() const { return states.back(); }
};

/// Integrates x' = v(x, t) from t = 0 to 1. Throws NumericalError with the
/// step index when a state stops being finite.
Trajectory integrate(const VelocityField& v, const Tensor& x0, const SamplerConfig& cfg);

/// Same integration, keeping only the endpoint.
Tensor integrate_endpoint(const VelocityField& v, const Tensor& x0, const SamplerConfig& cfg);

/// Moves `x` from time t_from to t_to (either direction) in `n_steps` equal steps.
Tensor transport(const VelocityField& v, Tensor x, double t_from, double t_to, std::size_t n_steps, Integrator integrator);

/// One step of the chosen integrator from (x, t) with signed step dt.
Tensor integrator_step(const VelocityField& v, const Tensor& x, double t, double dt, Integrator integrator);

/// Writes `x0,...,x{d-1}` CSV, one row per point, values at full precision.
void write_samples_csv(const std::filesystem::path& path, const Tensor& samples);

}  // namespace vggflow::flow

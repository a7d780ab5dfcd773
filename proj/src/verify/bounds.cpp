// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/verify/bounds.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "vggflow/flow/sampler.hpp"
#include "vggflow/numcore/errors.hpp"

namespace vggflow::verify {

double lipschitz_estimate(const flow::VelocityField& v, Rng& rng, std::size_t n_probes) {
  if (const auto* linear = dynamic_cast<const flow::LinearField*>(&v)) {
    const Tensor& A = linear->matrix();
    Eigen::MatrixXd m(A.rows(), A.cols());
    for (std::size_t i = 0; i < A.rows(); ++i)
      for (std::size_t j = 0; j < A.cols(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = A(i, j);
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
  }
  if (n_probes < 1) throw ValidationError("lipschitz: need at least one probe pair");
  const std::size_t d = v.dim();
  const Tensor x = rng.normal_matrix(n_probes, d, 2.0);
  Tensor y = x;
  kernels::axpy(y, 1.0, rng.normal_matrix(n_probes, d, 0.1));
  std::vector<double> t(n_probes);
  for (double& s : t) s = rng.uniform();
  const Tensor dv = kernels::sub(v.eval(x, t), v.eval(y, t));
  const auto num = kernels::row_norms(dv), den = kernels::row_norms(kernels::sub(x, y));
  double best = 0.0;
  for (std::size_t i = 0; i < n_probes; ++i)
    if (den[i] > 0.0) best = std::max(best, num[i] / den[i]);
  return 2.0 * best;
}

W2Bound w2_bound_check(const flow::VelocityField& v_theta, const flow::VelocityField& v_base, std::size_t n_samples,
                       std::size_t n_steps, Rng& rng, std::optional<double> lipschitz) {
  if (v_theta.dim() != v_base.dim()) throw ValidationError("w2 bound: field dims differ");
  if (n_samples < 1 || n_steps < 1) throw ValidationError("w2 bound: need samples and steps");
  W2Bound out;
  out.lipschitz = lipschitz ? *lipschitz : lipschitz_estimate(v_base, rng);
  if (!(out.lipschitz >= 0.0)) throw ValidationError("w2 bound: Lipschitz constant must be >= 0");

  const flow::SamplerConfig cfg{.n_steps = n_steps, .integrator = flow::Integrator::Rk4};
  const Tensor x0 = rng.normal_matrix(n_samples, v_base.dim());
  const flow::Trajectory traj = flow::integrate(v_theta, x0, cfg);
  const Tensor y1 = flow::integrate_endpoint(v_base, x0, cfg);
  out.lhs = kernels::squared_norm(kernels::sub(traj.terminal(), y1)) / static_cast<double>(n_samples);

  double integral = 0.0, prev = 0.0;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const auto ts = flow::repeat_time(n_samples, traj.times[k]);
    const Tensor residual = kernels::sub(v_theta.eval(traj.states[k], ts), v_base.eval(traj.states[k], ts));
    const double cur = kernels::squared_norm(residual) / static_cast<double>(n_samples);
    if (k > 0) integral += 0.5 * (prev + cur) * (traj.times[k] - traj.times[k - 1]);
    prev = cur;
  }
  out.rhs = std::exp(2.0 * out.lipschitz + 1.0) * integral;
  if (!std::isfinite(out.lhs) || !std::isfinite(out.rhs)) throw NumericalError("w2 bound: non-finite result");
  out.holds = out.lhs <= out.rhs * (1.0 + 1e-6);
  return out;
}

}  // namespace vggflow::verify

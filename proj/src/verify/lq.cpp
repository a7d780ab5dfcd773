// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/verify/lq.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "vggflow/numcore/errors.hpp"

namespace vggflow::verify {

namespace k = kernels;

void LqProblem::validate() const {
  const std::size_t d = A.rows();
  if (A.rank() != 2 || d == 0 || A.cols() != d) throw ValidationError("lq: A must be square, got " + shape_string(A.shape()));
  if (!A.all_finite()) throw ValidationError("lq: A must be finite");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lq: lambda must be finite and > 0");
  rewards::validate(reward(), d);
}

rewards::RewardSpec LqProblem::reward() const { return rewards::Quadratic{H, h}; }

flow::FieldPtr LqProblem::base_field() const { return std::make_shared<flow::LinearField>(A); }

LqProblem bundled_lq_problem() {
  return {Tensor::matrix(2, 2, {0.2, 0.3, -0.3, 0.1}), Tensor::matrix(2, 2, {1.0, 0.0, 0.0, 0.5}),
          Tensor::matrix(1, 2, {1.5, 1.0}), 1.0};
}

LqProblem random_lq_problem(std::size_t dim, double drift_scale, Rng& rng) {
  const Tensor m = rng.normal_matrix(dim, dim);
  Tensor H = k::scale(k::matmul(m, k::transpose(m)), 1.0 / static_cast<double>(dim));
  for (std::size_t i = 0; i < dim; ++i) H(i, i) += 0.1;
  return {rng.normal_matrix(dim, dim, drift_scale), H, rng.normal_matrix(1, dim), 1.0};
}

namespace {

std::size_t locate(const std::vector<double>& times, double t, double& frac) {
  if (t > 1.0 && t < 1.0 + 1e-12) t = 1.0;
  if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("lq: time " + std::to_string(t) + " outside [0, 1]");
  const std::size_t n = times.size() - 1;
  const auto cell = std::min(static_cast<std::size_t>(t * static_cast<double>(n)), n - 1);
  frac = (t - times[cell]) / (times[cell + 1] - times[cell]);
  return cell;
}

Tensor lerp(const std::vector<Tensor>& values, std::size_t cell, double frac) {
  return k::add(k::scale(values[cell], 1.0 - frac), k::scale(values[cell + 1], frac));
}

Tensor symmetrize(const Tensor& m) { return k::scale(k::add(m, k::transpose(m)), 0.5); }

double trace_product(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * b(j, i);
  return s;
}

// E[r(x)] for x ~ N(m, S) with r = -½xᵀHx + hᵀx.
double gaussian_reward(const LqProblem& prob, const Tensor& m, const Tensor& S) {
  const double quad = k::row_dot(k::matmul(m, prob.H), m).item();
  return -0.5 * (trace_product(prob.H, S) + quad) + k::row_dot(prob.h, m).item();
}

// Mean (row) and covariance of ẋ = M(t)x + c(t) from N(0, I), rk4 on `n` uniform steps.
double propagate_reward(const LqProblem& prob, std::size_t n, const std::function<Tensor(double)>& drift,
                        const std::function<Tensor(double)>& offset) {
  const std::size_t d = prob.dim();
  Tensor m = Tensor::zeros(1, d), S = Tensor::identity(d);
  const double dt = 1.0 / static_cast<double>(n);
  auto fm = [&](const Tensor& mean, double t) { return k::add(k::matmul(mean, k::transpose(drift(t))), offset(t)); };
  auto fs = [&](const Tensor& cov, double t) {
    const Tensor ms = k::matmul(drift(t), cov);
    return k::add(ms, k::transpose(ms));
  };
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    const Tensor m1 = fm(m, t), s1 = fs(S, t);
    const Tensor m2 = fm(k::add(m, k::scale(m1, dt / 2)), t + dt / 2), s2 = fs(k::add(S, k::scale(s1, dt / 2)), t + dt / 2);
    const Tensor m3 = fm(k::add(m, k::scale(m2, dt / 2)), t + dt / 2), s3 = fs(k::add(S, k::scale(s2, dt / 2)), t + dt / 2);
    const Tensor m4 = fm(k::add(m, k::scale(m3, dt)), t + dt), s4 = fs(k::add(S, k::scale(s3, dt)), t + dt);
    k::axpy(m, dt / 6, k::add(k::add(m1, k::scale(m2, 2.0)), k::add(k::scale(m3, 2.0), m4)));
    k::axpy(S, dt / 6, k::add(k::add(s1, k::scale(s2, 2.0)), k::add(k::scale(s3, 2.0), s4)));
    S = symmetrize(S);
  }
  return gaussian_reward(prob, m, S);
}

}  // namespace

Tensor RiccatiSolution::P_at(double t) const {
  double frac = 0.0;
  const std::size_t cell = locate(times, t, frac);
  return lerp(P, cell, frac);
}

Tensor RiccatiSolution::q_at(double t) const {
  double frac = 0.0;
  const std::size_t cell = locate(times, t, frac);
  return lerp(q, cell, frac);
}

RiccatiSolution riccati_solve(const LqProblem& prob, std::size_t n_grid, double cap) {
  prob.validate();
  if (n_grid < 16) throw ValidationError("riccati: n_grid must be >= 16");
  const double beta = prob.beta();
  const Tensor& A = prob.A;
  const Tensor At = k::transpose(A);
  // Derivatives in forward time; q is a row so Aᵀq becomes qA and Pq becomes qP.
  auto fP = [&](const Tensor& P) { return k::sub(k::scale(k::matmul(P, P), beta), k::add(k::matmul(P, A), k::matmul(At, P))); };
  auto fq = [&](const Tensor& P, const Tensor& q) { return k::sub(k::scale(k::matmul(q, P), beta), k::matmul(q, A)); };

  RiccatiSolution sol;
  sol.times.resize(n_grid + 1);
  for (std::size_t i = 0; i <= n_grid; ++i) sol.times[i] = static_cast<double>(i) / static_cast<double>(n_grid);
  sol.P.resize(n_grid + 1);
  sol.q.resize(n_grid + 1);
  sol.P[n_grid] = symmetrize(prob.H);
  sol.q[n_grid] = k::scale(prob.h, -1.0);

  const double h = -1.0 / static_cast<double>(n_grid);
  for (std::size_t i = n_grid; i-- > 0;) {
    const Tensor& P = sol.P[i + 1];
    const Tensor& q = sol.q[i + 1];
    const Tensor p1 = fP(P), q1 = fq(P, q);
    const Tensor P2 = k::add(P, k::scale(p1, h / 2)), Q2 = k::add(q, k::scale(q1, h / 2));
    const Tensor p2 = fP(P2), q2 = fq(P2, Q2);
    const Tensor P3 = k::add(P, k::scale(p2, h / 2)), Q3 = k::add(q, k::scale(q2, h / 2));
    const Tensor p3 = fP(P3), q3 = fq(P3, Q3);
    const Tensor P4 = k::add(P, k::scale(p3, h)), Q4 = k::add(q, k::scale(q3, h));
    const Tensor p4 = fP(P4), q4 = fq(P4, Q4);
    Tensor nextP = P, nextq = q;
    k::axpy(nextP, h / 6, k::add(k::add(p1, k::scale(p2, 2.0)), k::add(k::scale(p3, 2.0), p4)));
    k::axpy(nextq, h / 6, k::add(k::add(q1, k::scale(q2, 2.0)), k::add(k::scale(q3, 2.0), q4)));
    nextP = symmetrize(nextP);
    const double norm = std::sqrt(k::squared_norm(nextP));
    if (!std::isfinite(norm) || norm > cap || !nextq.all_finite()) {
      throw NumericalError("riccati: solution blew up at t = " + std::to_string(sol.times[i]),
                           static_cast<std::ptrdiff_t>(i));
    }
    sol.P[i] = std::move(nextP);
    sol.q[i] = std::move(nextq);
  }
  return sol;
}

Tensor lq_value_gradient(const RiccatiSolution& sol, const Tensor& x, std::span<const double> t) {
  const std::size_t d = sol.P.front().rows();
  if (x.rank() != 2 || x.cols() != d || t.size() != x.rows()) {
    throw ValidationError("lq value gradient: points have shape " + shape_string(x.shape()));
  }
  Tensor out = Tensor::zeros(x.rows(), d);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double frac = 0.0;
    const std::size_t cell = locate(sol.times, t[i], frac);
    for (std::size_t a = 0; a < d; ++a) {
      double v = (1.0 - frac) * sol.q[cell](0, a) + frac * sol.q[cell + 1](0, a);
      for (std::size_t b = 0; b < d; ++b) {
        v += ((1.0 - frac) * sol.P[cell](a, b) + frac * sol.P[cell + 1](a, b)) * x(i, b);
      }
      out(i, a) = v;
    }
  }
  return out;
}

Tensor LqOptimalField::eval(const Tensor& x, std::span<const double> t) const {
  Tensor out = k::matmul(x, k::transpose(prob_.A));
  k::axpy(out, -prob_.beta(), lq_value_gradient(sol_, x, t));
  return out;
}

double lq_optimal_mean_reward(const LqProblem& prob, const RiccatiSolution& sol) {
  const double beta = prob.beta();
  return propagate_reward(
      prob, sol.times.size() - 1, [&](double t) { return k::sub(prob.A, k::scale(sol.P_at(t), beta)); },
      [&](double t) { return k::scale(sol.q_at(t), -beta); });
}

double lq_base_mean_reward(const LqProblem& prob) {
  prob.validate();
  const Tensor zero = Tensor::zeros(1, prob.dim());
  return propagate_reward(prob, 1000, [&](double) { return prob.A; }, [&](double) { return zero; });
}

}  // namespace vggflow::verify

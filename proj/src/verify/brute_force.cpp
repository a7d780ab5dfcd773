// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/verify/brute_force.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>

#include "vggflow/numcore/errors.hpp"

namespace vggflow::verify {

namespace k = kernels;

namespace {

// Exact zero-order-hold transition x_{i+1} = Φ·x_i + Γ·u_i over one step.
struct Transition {
  Tensor phi;
  Tensor gamma;
};

Transition zero_order_hold(const Tensor& A, double dt) {
  const auto d = static_cast<Eigen::Index>(A.rows());
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) aug(a, b) = A(a, b) * dt;
    aug(a, d + a) = dt;
  }
  const Eigen::MatrixXd e = aug.exp();
  Transition out{Tensor::zeros(A.rows(), A.rows()), Tensor::zeros(A.rows(), A.rows())};
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      out.phi(a, b) = e(a, b);
      out.gamma(a, b) = e(a, d + b);
    }
  }
  return out;
}

struct Rollout {
  Tensor states;
  double objective = 0.0;
};

Rollout roll(const LqProblem& prob, const Transition& step, std::span<const double> x0, const Tensor& controls,
             double dt) {
  const std::size_t n = controls.rows(), d = prob.dim();
  Rollout out{Tensor::zeros(n + 1, d), 0.0};
  std::copy(x0.begin(), x0.end(), out.states.row_span(0).begin());
  double running = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      double next = 0.0;
      for (std::size_t b = 0; b < d; ++b) next += step.phi(a, b) * out.states(i, b) + step.gamma(a, b) * controls(i, b);
      out.states(i + 1, a) = next;
      running += controls(i, a) * controls(i, a);
    }
  }
  const double reward = rewards::reward_eval_point(prob.reward(), out.states.row_span(n));
  out.objective = 0.5 * prob.lambda * dt * running - reward;
  return out;
}

// Row i holds Γᵀp_{i+1} / Δt, where p is the discrete adjoint with
// p_N = H·x_N - h and p_i = Φᵀp_{i+1}.
Tensor control_costates(const LqProblem& prob, const Transition& step, const Tensor& states, double dt) {
  const std::size_t n = states.rows() - 1, d = prob.dim();
  std::vector<double> p(d), prev(d);
  for (std::size_t a = 0; a < d; ++a) {
    p[a] = -prob.h(0, a);
    for (std::size_t b = 0; b < d; ++b) p[a] += prob.H(a, b) * states(n, b);
  }
  Tensor out = Tensor::zeros(n, d);
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t a = 0; a < d; ++a) {
      double v = 0.0;
      for (std::size_t b = 0; b < d; ++b) v += step.gamma(b, a) * p[b];
      out(i, a) = v / dt;
    }
    prev = p;
    for (std::size_t a = 0; a < d; ++a) {
      p[a] = 0.0;
      for (std::size_t b = 0; b < d; ++b) p[a] += step.phi(b, a) * prev[b];
    }
  }
  return out;
}

}  // namespace

BruteForceResult brute_force_control(const LqProblem& prob, std::span<const double> x0, std::size_t n_steps,
                                     const BruteForceConfig& cfg) {
  prob.validate();
  if (cfg.iters < 1) throw ValidationError("brute force: iters must be >= 1");
  if (n_steps < 1) throw ValidationError("brute force: n_steps must be >= 1");
  if (x0.size() != prob.dim()) throw ValidationError("brute force: x0 has the wrong dimension");
  const double dt = 1.0 / static_cast<double>(n_steps);
  const std::size_t d = prob.dim();

  const Transition transition = zero_order_hold(prob.A, dt);

  BruteForceResult result;
  result.controls = Tensor::zeros(n_steps, d);
  Rollout current = roll(prob, transition, x0, result.controls, dt);
  result.history.push_back(current.objective);
  double step = 1.0 / prob.lambda;

  for (std::size_t it = 0; it < cfg.iters; ++it) {
    // Descent direction is the gradient scaled by -1/Δt.
    Tensor direction = k::scale(
        k::add(k::scale(result.controls, prob.lambda), control_costates(prob, transition, current.states, dt)), -1.0);
    double worst = 0.0, slope = 0.0;
    for (double v : direction.data()) {
      worst = std::max(worst, std::abs(v));
      slope -= dt * v * v;
    }
    if (worst < cfg.tolerance) break;

    bool accepted = false;
    step *= 2.0;
    for (std::size_t tries = 0; tries < cfg.max_backtracks; ++tries, step *= 0.5) {
      Tensor trial = result.controls;
      k::axpy(trial, step, direction);
      Rollout next = roll(prob, transition, x0, trial, dt);
      if (next.objective <= current.objective + cfg.armijo * step * slope) {
        result.controls = std::move(trial);
        current = std::move(next);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Round-off floor: the objective can no longer resolve the decrease.
      if (worst < 1e-7 * (1.0 + std::abs(current.objective))) break;
      throw NumericalError("brute force: line search failed after " + std::to_string(cfg.max_backtracks) + " attempts",
                           static_cast<std::ptrdiff_t>(it));
    }
    const bool stalled = current.objective >= result.history.back();
    result.history.push_back(current.objective);
    result.iterations = it + 1;
    if (stalled) break;
  }
  result.states = current.states;
  result.objective = current.objective;
  return result;
}

double feedback_gap_rms(const LqProblem& prob, const RiccatiSolution& sol, const BruteForceResult& result) {
  const std::size_t n = result.controls.rows(), d = prob.dim();
  const Tensor g = lq_value_gradient(sol, result.states, [&] {
    std::vector<double> ts(n + 1);
    for (std::size_t i = 0; i <= n; ++i) ts[i] = static_cast<double>(i) / static_cast<double>(n);
    return ts;
  }());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      const double gap = result.controls(i, a) + 0.5 * prob.beta() * (g(i, a) + g(i + 1, a));
      sum += gap * gap;
    }
  }
  return std::sqrt(sum / static_cast<double>(n * d));
}

}  // namespace vggflow::verify

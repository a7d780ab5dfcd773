// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vggflow/align/value_gradient.hpp"

namespace vggflow::verify {

/// Linear base field v_base(x) = A·x, reward r(x) = -½xᵀHx + hᵀx and
/// control cost (λ/2)‖ṽ‖².
struct LqProblem {
  Tensor A;
  Tensor H;
  Tensor h;
  double lambda = 1.0;

  std::size_t dim() const { return A.rows(); }
  double beta() const { return 1.0 / lambda; }
  void validate() const;
  rewards::RewardSpec reward() const;
  flow::FieldPtr base_field() const;
};

/// Fixed 2D instance whose optimal mean reward clears the base by a wide margin.
LqProblem bundled_lq_problem();

/// Random instance: A entries ~ N(0, drift_scale²), H = MMᵀ/d + 0.1·I, h ~ N(0, I).
LqProblem random_lq_problem(std::size_t dim, double drift_scale, Rng& rng);

/// V(x, t) = ½xᵀP(t)x + q(t)ᵀx + c(t) on a uniform grid; q is stored as a row.
struct RiccatiSolution {
  std::vector<double> times;
  std::vector<Tensor> P;
  std::vector<Tensor> q;

  /// Linear interpolation between grid points; t must lie in [0, 1].
  Tensor P_at(double t) const;
  Tensor q_at(double t) const;
};

inline constexpr double kRiccatiCap = 1e8;

/// rk4 backward from P(1) = H, q(1) = -h of
///   Ṗ = βP² - (PA + AᵀP),  q̇ = βPq - Aᵀq,
/// symmetrizing P after every step. Throws NumericalError when ‖P‖ exceeds `cap`.
RiccatiSolution riccati_solve(const LqProblem& prob, std::size_t n_grid = 1000, double cap = kRiccatiCap);

/// ∇V(x, t) = P(t)x + q(t) per row.
Tensor lq_value_gradient(const RiccatiSolution& sol, const Tensor& x, std::span<const double> t);

/// The oracle value gradient as a GradientModel (recorded as a constant).
class LqValueGradient final : public align::GradientModel {
 public:
  explicit LqValueGradient(RiccatiSolution sol) : sol_(std::move(sol)) {}
  std::size_t dim() const override { return sol_.P.front().rows(); }
  Tensor eval(const Tensor& x, std::span<const double> t) const override { return lq_value_gradient(sol_, x, t); }

 private:
  RiccatiSolution sol_;
};

/// Optimal controlled field A·x - β(P(t)x + q(t)).
class LqOptimalField final : public flow::VelocityField {
 public:
  LqOptimalField(LqProblem prob, RiccatiSolution sol) : prob_(std::move(prob)), sol_(std::move(sol)) {}
  std::size_t dim() const override { return prob_.dim(); }
  Tensor eval(const Tensor& x, std::span<const double> t) const override;
  const RiccatiSolution& solution() const noexcept { return sol_; }

 private:
  LqProblem prob_;
  RiccatiSolution sol_;
};

/// E[r(x₁)] for x₀ ~ N(0, I) under the linear feedback field, from the exact
/// Gaussian mean/covariance ODEs integrated with rk4 on the solution grid.
double lq_optimal_mean_reward(const LqProblem& prob, const RiccatiSolution& sol);

/// E[r(x₁)] for x₀ ~ N(0, I) under the uncontrolled base field.
double lq_base_mean_reward(const LqProblem& prob);

}  // namespace vggflow::verify

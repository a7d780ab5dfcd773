// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "vggflow/flow/field.hpp"
#include "vggflow/numcore/rng.hpp"

namespace vggflow::verify {

struct W2Result {
  double squared = 0.0;
  /// False when the sliced approximation was used.
  bool exact = true;
};

inline constexpr std::size_t kExactAssignmentLimit = 256;
inline constexpr std::size_t kSlicedProjections = 64;

/// Squared 2-Wasserstein distance between equal-size sample sets `[n, d]`:
/// sorted matching for d = 1, exact assignment for n <= 256, otherwise sliced
/// W2 averaged over 64 fixed random directions.
W2Result w2_distance(const Tensor& a, const Tensor& b);

/// Minimum-cost perfect matching on a square cost matrix; returns the column
/// assigned to each row.
std::vector<std::size_t> min_cost_assignment(const Tensor& cost);

/// Trace of the unbiased sample covariance.
double diversity(const Tensor& samples);

struct KlConfig {
  std::size_t n_samples = 4096;
  std::size_t n_steps = 40;
  /// Finite-difference step for ∇log q_t.
  double score_step = 1e-4;
};

struct KlResult {
  /// Mean of log p₁ - log q₁ over samples of p₁ and its standard error.
  double kl = 0.0;
  double stderr_kl = 0.0;
  /// -∫E_p[ṽ·∇log q_t]dt - ∫E_p[∇·ṽ]dt with ṽ = v_p - v_q.
  double identity_rhs = 0.0;
  /// ½∫E‖ṽ‖², ½∫E‖∇log q_t‖², ∫E[∇·ṽ].
  double term_a = 0.0;
  double term_b = 0.0;
  double term_c = 0.0;
};

/// KL(p₁‖q₁) between the pushforwards of N(0, I) under two fields, with the
/// path identity evaluated along rk4 trajectories of v_p.
KlResult kl_between_flows(const flow::VelocityField& v_p, const flow::VelocityField& v_q, const KlConfig& cfg,
                          Rng& rng);

struct MetricReport {
  double mean_reward = 0.0;
  double diversity = 0.0;
  double w2_to_base = 0.0;
  bool w2_exact = true;
  std::optional<double> kl_to_base;
  std::optional<double> kl_stderr;
  std::optional<double> bound_lhs;
  std::optional<double> bound_rhs;
  std::optional<double> kl_term_a;
  std::optional<double> kl_term_b;
  std::optional<double> kl_term_c;
  std::optional<double> kl_identity_rhs;
};

std::string report_json(const MetricReport& report);
void write_report(const std::filesystem::path& path, const MetricReport& report);

}  // namespace vggflow::verify

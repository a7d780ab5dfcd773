// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "vggflow/flow/field.hpp"

namespace vggflow::cli {

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Measured quantity against its limit, human readable.
  std::string detail;
  double seconds = 0.0;
};

/// Reverse-mode gradients of random composite graphs against central
/// differences; passes when every relative error is below 1e-5.
CheckResult check_autodiff(std::size_t n_graphs, std::uint64_t seed);

/// Open-loop optimized controls against the Riccati feedback law on random
/// 2D LQ instances, RMS below 1e-3 each.
CheckResult check_riccati_cross_oracle(std::size_t n_instances, std::uint64_t seed);

/// Scalar A = 0 Riccati against P(t) = λH/(λ + H(1 - t)) within 1e-8.
CheckResult check_riccati_scalar();

/// Partial-mode consistency residual of the Riccati value gradient along
/// base trajectories of the bundled instance, ε = 1e-3.
CheckResult check_hjb_consistency(std::uint64_t seed);

/// PMP costates against P(t)x + q(t) along optimal trajectories, 100 steps.
CheckResult check_pmp_equivalence(std::uint64_t seed);

/// Bundled instance: Riccati vs brute force from several starts.
CheckResult check_bundled_oracle(std::uint64_t seed);

/// Constant residual on a zero base: lhs = ‖c‖², rhs = e‖c‖².
CheckResult check_w2_bound_hand();

/// W2 bound for random small MLP residuals on top of `base`.
CheckResult check_w2_bound_random(const flow::FieldPtr& base, std::size_t n_fields, std::uint64_t seed);

/// 1D linear-field Gaussian pairs: Monte Carlo KL and the identity's right
/// side each within 2% of the closed form at 4096 samples.
CheckResult check_kl_identity(std::uint64_t seed);

/// Finite-difference divergence and the exact log-density of linear fields.
CheckResult check_density_kernels(std::uint64_t seed);

/// Small rectified-flow base on the default mixture, for checks needing a
/// pretrained 2D field.
flow::FieldPtr quick_base(std::uint64_t seed);

std::vector<CheckResult> oracle_suite(std::uint64_t seed);
std::vector<CheckResult> selfcheck_suite(std::uint64_t seed);

nlohmann::ordered_json checks_json(const std::vector<CheckResult>& checks);
bool all_passed(const std::vector<CheckResult>& checks);

}  // namespace vggflow::cli

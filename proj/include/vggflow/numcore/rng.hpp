// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

#include "vggflow/numcore/tensor.hpp"

namespace vggflow {

/// Seeded pseudo-random stream.
///
/// Uniform and normal variates are derived from the raw 64-bit engine output
/// with fixed formulas (no std distributions), so a seed and a call sequence
/// fix the output bitwise on every platform. `split` derives an independent
/// named substream without advancing the parent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }
  Rng split(std::string_view name) const;

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n);
  double normal();

  Tensor normal_matrix(std::size_t rows, std::size_t cols, double stddev = 1.0);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace vggflow

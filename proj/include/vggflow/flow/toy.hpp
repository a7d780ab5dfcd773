// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <variant>
#include <vector>

#include "vggflow/numcore/rng.hpp"

namespace vggflow::flow {

/// Isotropic Gaussian mixture; means are `[k, d]`.
struct GaussianMixture {
  Tensor means;
  double variance = 0.01;
  std::vector<double> weights;
};

/// Uniform over the even cells of a 2D checkerboard covering [-extent, extent]^2.
struct Checkerboard {
  double cell_size = 1.0;
  double extent = 2.0;
};

/// Axis-aligned Gaussian.
struct Gaussian {
  std::vector<double> mean;
  std::vector<double> variance;
};

using ToyDistribution = std::variant<GaussianMixture, Checkerboard, Gaussian>;

void validate(const ToyDistribution& dist);
std::size_t dim(const ToyDistribution& dist);
std::string family_name(const ToyDistribution& dist);

/// `[n, d]` independent draws.
Tensor sample(const ToyDistribution& dist, std::size_t n, Rng& rng);

/// Eight-mode ring mixture used by default experiments.
GaussianMixture default_mixture();

}  // namespace vggflow::flow

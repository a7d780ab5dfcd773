// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "vggflow/numcore/tensor.hpp"

namespace vggflow::rewards {

/// r(x) = -1/2 xᵀHx + hᵀx. H is `[d, d]`, h is `[1, d]`.
struct Quadratic {
  Tensor H;
  Tensor h;
};

/// Log-density of an isotropic Gaussian mixture. Means are `[k, d]`.
struct GaussMixLogDensity {
  Tensor means;
  std::vector<double> weights;
  double variance = 1.0;
};

/// r(x) = offset - (|x| - radius)^2 / (2 width^2).
struct Ring {
  double radius = 1.0;
  double width = 1.0;
  double offset = 0.0;
};

struct ReluWrapped;

using RewardSpec = std::variant<Quadratic, GaussMixLogDensity, Ring, ReluWrapped>;

/// max(0, inner(x)).
struct ReluWrapped {
  std::shared_ptr<const RewardSpec> inner;
};

/// Throws ValidationError when the spec breaks its invariants or, for
/// families with a fixed dimension, when `dim` disagrees.
void validate(const RewardSpec& spec, std::size_t dim);

/// Fixed dimension of a family, or 0 when any dimension works (Ring).
std::size_t native_dim(const RewardSpec& spec);

ReluWrapped relu_wrap(RewardSpec inner);
bool is_relu_wrapped(const RewardSpec& spec);
std::string family_name(const RewardSpec& spec);

/// Rewards of a `[n, d]` batch as an `[n, 1]` column.
Tensor reward_eval(const RewardSpec& spec, const Tensor& x);
/// Reward gradients of a `[n, d]` batch, row per point.
Tensor reward_grad(const RewardSpec& spec, const Tensor& x);

double reward_eval_point(const RewardSpec& spec, std::span<const double> x);
double mean_reward(const RewardSpec& spec, const Tensor& x);

}  // namespace vggflow::rewards

// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "vggflow/align/losses.hpp"
#include "vggflow/flow/sampler.hpp"

namespace vggflow::baselines {

/// Direct reward maximization through a truncated graph. `value` is the
/// negated mean reward of the differentiated endpoints; `theta` is the
/// gradient of that value with respect to the residual network.
using align::LossResult;

/// One-step prediction x + (1 - t)·v_θ(x, t) from detached states `x`,
/// scored by the reward. Gradients reach θ only through v_θ.
LossResult refl_loss(const flow::FinetunedField& policy, const rewards::RewardSpec& reward, const Tensor& x,
                     std::span<const double> t);

/// Unrolls Euler steps `start .. times.size() - 1` of the grid `times` from
/// the detached states `x` (taken at times[start]) and scores the endpoint.
LossResult draft_loss(const flow::FinetunedField& policy, const rewards::RewardSpec& reward, const Tensor& x,
                      std::span<const double> times, std::size_t start);

}  // namespace vggflow::baselines

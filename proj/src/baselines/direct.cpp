// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/baselines/direct.hpp"

#include <cmath>

#include "vggflow/numcore/errors.hpp"

namespace vggflow::baselines {

namespace {

void check_states(const flow::FinetunedField& policy, const Tensor& x) {
  if (x.rank() != 2 || x.rows() == 0 || x.cols() != policy.dim()) {
    throw ValidationError("direct loss: states have shape " + shape_string(x.shape()) + ", expected [n, " +
                          std::to_string(policy.dim()) + "]");
  }
}

// Registers θ so every residual parameter has an entry, even if unreached.
void register_theta(Tape& tape, const flow::FinetunedField& policy) {
  for (const auto& [name, value] : policy.residual().params()) tape.param(std::string(align::kThetaPrefix) + name, value);
}

// -mean r(endpoint) via the surrogate -mean ⟨∇r(endpoint), endpoint⟩ with the
// reward gradient held constant; both share the same θ-gradient.
LossResult score(Tape& tape, Var endpoint, const rewards::RewardSpec& reward) {
  const Tensor& x1 = tape.value(endpoint);
  const double n = static_cast<double>(x1.rows());
  const double value = -rewards::mean_reward(reward, x1);
  if (!std::isfinite(value)) throw NumericalError("direct loss: non-finite reward");
  Var surrogate = tape.scale(tape.sum(tape.mul(tape.constant(rewards::reward_grad(reward, x1)), endpoint)), -1.0 / n);
  return {value, nets::strip_prefix(backward(tape, surrogate), std::string(align::kThetaPrefix)), {}};
}

}  // namespace

LossResult refl_loss(const flow::FinetunedField& policy, const rewards::RewardSpec& reward, const Tensor& x,
                     std::span<const double> t) {
  check_states(policy, x);
  if (t.size() != x.rows()) throw ValidationError("refl loss: one time per state required");
  Tape tape;
  register_theta(tape, policy);
  Var xs = tape.constant(x);
  Var v = policy.record_trainable(tape, xs, t, std::string(align::kThetaPrefix));
  Tensor remaining = Tensor::zeros(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i) remaining(i, 0) = 1.0 - t[i];
  Var endpoint = tape.add(xs, tape.mul(v, tape.constant(remaining)));
  return score(tape, endpoint, reward);
}

LossResult draft_loss(const flow::FinetunedField& policy, const rewards::RewardSpec& reward, const Tensor& x,
                      std::span<const double> times, std::size_t start) {
  check_states(policy, x);
  if (times.size() < 2 || start + 1 >= times.size()) {
    throw ValidationError("draft loss: start step " + std::to_string(start) + " leaves no step on a grid of " +
                          std::to_string(times.size()) + " times");
  }
  Tape tape;
  register_theta(tape, policy);
  Var state = tape.constant(x);
  for (std::size_t i = start; i + 1 < times.size(); ++i) {
    const auto t = flow::repeat_time(x.rows(), times[i]);
    Var v = policy.record_trainable(tape, state, t, std::string(align::kThetaPrefix));
    state = tape.add(state, tape.scale(v, times[i + 1] - times[i]));
  }
  return score(tape, state, reward);
}

}  // namespace vggflow::baselines

// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "vggflow/numcore/tape.hpp"

namespace vggflow {

struct AdamWHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 1e-2;
  double epsilon = 1e-8;
};

struct OptState {
  AdamWHyper hyper;
  std::uint64_t step = 0;
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;
};

/// One AdamW step with decoupled weight decay and bias-corrected moments:
/// p ← p − lr·wd·p − lr·m̂/(√v̂ + ε). Moments are created lazily on the first step.
void adamw_step(ParamSet& params, const GradMap& grads, OptState& state);

/// Rescales all gradients together so that their global L2 norm is at most
/// `max_norm`. Returns the norm before clipping.
double clip_global_norm(GradMap& grads, double max_norm);

}  // namespace vggflow

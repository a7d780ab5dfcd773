// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

#include "vggflow/align/trainer.hpp"
#include "vggflow/baselines/adjoint.hpp"
#include "vggflow/baselines/direct.hpp"

namespace vggflow::baselines {

enum class BaselineKind { Refl, Draft, PmpAdjoint, LeanAdjoint };

std::string to_string(BaselineKind k);
BaselineKind parse_baseline(std::string_view name);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::Refl;
  /// DRaFT unroll length.
  std::size_t draft_k = 5;
  /// ReFL truncation step drawn uniformly from [refl_min_step, refl_max_step).
  std::size_t refl_min_step = 15;
  std::size_t refl_max_step = 20;
  /// ReFL and DRaFT maximize max(0, r) unless the reward is already wrapped.
  bool relu_wrap = true;
  /// Adjoint methods regress ṽ_θ onto -β·a.
  double beta = 1.0;
  std::size_t bins = 5;
  double adjoint_fd_step = kAdjointStep;
  std::size_t n_rounds = 400;
  std::size_t batch = 32;
  double lr = 1e-4;
  double weight_decay = 1e-2;
  double grad_clip = 1.0;
  flow::SamplerConfig sampler;
  nets::MlpSpec residual_net;
  std::uint64_t seed = 0;
  double divergence_margin = 1.0;
  std::size_t divergence_patience = 50;

  void validate() const;
};

/// Trains the policy residual with the chosen baseline. Metrics reuse the
/// finetune schema: loss_matching holds the method's own loss, the value
/// losses and grad_norm_phi are 0, and no value-gradient field is returned.
align::TrainResult baseline_train(const BaselineConfig& cfg, const flow::FieldPtr& base,
                                  const rewards::RewardSpec& reward, const align::RoundObserver& observer = {});

}  // namespace vggflow::baselines

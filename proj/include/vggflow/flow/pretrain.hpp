// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "vggflow/flow/field.hpp"
#include "vggflow/flow/toy.hpp"
#include "vggflow/numcore/optim.hpp"

namespace vggflow::flow {

struct PretrainConfig {
  std::size_t steps = 3000;
  std::size_t batch = 256;
  double learning_rate = 2e-3;
  double weight_decay = 0.0;
  /// Cosine-anneal the learning rate to zero over `steps`.
  bool cosine_decay = true;
};

struct PretrainResult {
  nets::Mlp net;
  std::vector<double> losses;
};

/// Regresses the network onto x1 - x0 along x_t = (1 - t) x0 + t x1 with
/// x0 ~ N(0, I), x1 ~ data and t ~ U[0, 1]. Times are stratified across the
/// batch, one per equal-width slice of [0, 1].
PretrainResult pretrain_rectified_flow(const ToyDistribution& data, const nets::MlpSpec& spec, const PretrainConfig& cfg,
                                       Rng& rng);

}  // namespace vggflow::flow

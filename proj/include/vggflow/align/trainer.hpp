// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vggflow/align/losses.hpp"
#include "vggflow/flow/sampler.hpp"

namespace vggflow::align {

struct FinetuneConfig {
  double beta = 1.0;
  double alpha = 1e4;
  double fd_eps = 1e-3;
  std::size_t n_rounds = 400;
  std::size_t batch = 32;
  std::size_t bins = 5;
  bool jitter = true;
  double clip_percentile = 80.0;
  double lr_theta = 1e-3;
  double lr_phi = 1e-3;
  double weight_decay = 1e-2;
  double grad_clip = 1.0;
  EtaSchedule eta = EtaSchedule::Quadratic;
  ConsistencyMode mode = ConsistencyMode::Partial;
  flow::SamplerConfig sampler;
  nets::MlpSpec residual_net;
  nets::MlpSpec value_net;
  std::uint64_t seed = 0;
  double divergence_margin = 1.0;
  std::size_t divergence_patience = 50;

  void validate() const;
};

struct RoundMetrics {
  std::size_t round = 0;
  double mean_reward = 0.0;
  double loss_matching = 0.0;
  double loss_consistency = 0.0;
  double loss_boundary = 0.0;
  double grad_norm_theta = 0.0;
  double grad_norm_phi = 0.0;
};

struct TrainWarning {
  std::size_t round = 0;
  std::string message;
};

/// Called after every round with the metrics and the updated policy.
using RoundObserver = std::function<void(const RoundMetrics&, const flow::FinetunedField&)>;

struct TrainResult {
  flow::FinetunedField policy;
  std::optional<ValueGradientField> gfield;
  std::vector<RoundMetrics> metrics;
  std::vector<TrainWarning> warnings;
};

/// Fresh policy whose residual network outputs zero, so it equals the base.
flow::FinetunedField initial_policy(const flow::FieldPtr& base, const nets::MlpSpec& like, Rng& rng);

/// Tracks consecutive rounds whose reward sits below the first round's by
/// more than a margin and reports when the streak reaches the patience.
class DivergenceGuard {
 public:
  DivergenceGuard(double margin, std::size_t patience) : margin_(margin), patience_(patience) {}
  std::optional<TrainWarning> observe(std::size_t round, double mean_reward);

 private:
  double margin_;
  std::size_t patience_;
  std::optional<double> initial_;
  std::size_t streak_ = 0;
};

/// Value-gradient finetuning. Each round samples trajectories from the
/// current policy, takes one optimizer step on the value-gradient network
/// (consistency + α·boundary) and then one on the policy residual (matching).
TrainResult vgg_flow_train(const FinetuneConfig& cfg, const flow::FieldPtr& base, const rewards::RewardSpec& reward,
                           const RoundObserver& observer = {});

/// Round metrics as CSV with a fixed header; values at full precision.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<RoundMetrics>& metrics);
std::string metrics_csv_header();

}  // namespace vggflow::align

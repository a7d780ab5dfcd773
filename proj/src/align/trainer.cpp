// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/align/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "vggflow/numcore/errors.hpp"
#include "vggflow/numcore/optim.hpp"

namespace vggflow::align {

void FinetuneConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ValidationError("finetune config: " + msg);
  };
  require(std::isfinite(beta) && beta >= 0.0, "beta must be finite and >= 0");
  require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be finite and >= 0");
  require(std::isfinite(fd_eps) && fd_eps > 0.0 && fd_eps < 1.0, "fd_eps must lie in (0, 1)");
  require(batch >= 1, "batch must be >= 1");
  require(bins >= 1, "bins must be >= 1");
  require(clip_percentile > 0.0 && clip_percentile <= 100.0, "clip_percentile must lie in (0, 100]");
  require(lr_theta >= 0.0 && lr_phi >= 0.0, "learning rates must be >= 0");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(grad_clip > 0.0, "grad_clip must be > 0");
  require(divergence_margin >= 0.0, "divergence_margin must be >= 0");
  sampler.validate();
  require(bins <= sampler.n_steps, "bins (" + std::to_string(bins) + ") exceed sampler steps (" +
                                       std::to_string(sampler.n_steps) + ")");
  residual_net.validate();
  value_net.validate();
}

flow::FinetunedField initial_policy(const flow::FieldPtr& base, const nets::MlpSpec& like, Rng& rng) {
  if (!base) throw ValidationError("initial policy: base field is null");
  return flow::FinetunedField(base, nets::Mlp::initialize(flow::residual_spec(base->dim(), like), rng));
}

std::optional<TrainWarning> DivergenceGuard::observe(std::size_t round, double mean_reward) {
  if (!initial_) {
    initial_ = mean_reward;
    return std::nullopt;
  }
  if (mean_reward < *initial_ - margin_) {
    if (++streak_ == patience_) {
      return TrainWarning{round, "mean reward stayed more than " + std::to_string(margin_) + " below its initial value for " +
                                     std::to_string(patience_) + " rounds"};
    }
  } else {
    streak_ = 0;
  }
  return std::nullopt;
}

namespace {

OptState make_state(double lr, double weight_decay) {
  OptState s;
  s.hyper.learning_rate = lr;
  s.hyper.weight_decay = weight_decay;
  return s;
}

}  // namespace

TrainResult vgg_flow_train(const FinetuneConfig& cfg, const flow::FieldPtr& base, const rewards::RewardSpec& reward,
                           const RoundObserver& observer) {
  cfg.validate();
  if (!base) throw ValidationError("finetune: base field is null");
  const std::size_t dim = base->dim();
  rewards::validate(reward, dim);

  const Rng root(cfg.seed);
  Rng init_theta = root.split("init.theta");
  Rng init_phi = root.split("init.phi");
  Rng noise = root.split("noise");
  Rng subsample = root.split("subsample");

  TrainResult result{initial_policy(base, cfg.residual_net, init_theta),
                     ValueGradientField::initialize(reward, dim, cfg.value_net, cfg.eta, init_phi),
                     {},
                     {}};
  flow::FinetunedField& policy = result.policy;
  ValueGradientField& gfield = *result.gfield;

  OptState theta_state = make_state(cfg.lr_theta, cfg.weight_decay);
  OptState phi_state = make_state(cfg.lr_phi, cfg.weight_decay);
  DivergenceGuard guard(cfg.divergence_margin, cfg.divergence_patience);
  const ResidualOptions opts{cfg.fd_eps, cfg.beta, cfg.mode, nullptr};

  for (std::size_t round = 0; round < cfg.n_rounds; ++round) {
    try {
      const Tensor x0 = noise.normal_matrix(cfg.batch, dim);
      const flow::Trajectory traj = flow::integrate(policy, x0, cfg.sampler);
      TransitionBatch batch = subsample_transitions(traj, cfg.bins, subsample);
      if (cfg.jitter) batch = jitter_within_steps(std::move(batch), 1.0 / static_cast<double>(cfg.sampler.n_steps), subsample);

      double tau = kNoClip;
      if (cfg.clip_percentile < 100.0) {
        tau = clip_threshold(gfield.predicted_reward_grad(policy, batch.states, batch.times), cfg.clip_percentile);
      }

      RoundMetrics m;
      m.round = round;
      m.mean_reward = rewards::mean_reward(reward, batch.terminals);

      ValueLosses value = value_losses(LossContext{policy, gfield, tau}, batch, opts, cfg.alpha);
      m.loss_consistency = value.consistency;
      m.loss_boundary = value.boundary;
      m.grad_norm_phi = clip_global_norm(value.phi, cfg.grad_clip);
      adamw_step(gfield.correction().params(), value.phi, phi_state);

      LossResult matching = matching_loss(LossContext{policy, gfield, tau}, batch, cfg.beta);
      m.loss_matching = matching.value;
      m.grad_norm_theta = clip_global_norm(matching.theta, cfg.grad_clip);
      adamw_step(policy.residual().params(), matching.theta, theta_state);

      if (!std::isfinite(m.mean_reward) || !std::isfinite(m.grad_norm_phi) || !std::isfinite(m.grad_norm_theta)) {
        throw NumericalError("non-finite reward or gradient norm");
      }
      if (auto w = guard.observe(round, m.mean_reward)) result.warnings.push_back(*w);
      result.metrics.push_back(m);
      if (observer) observer(m, policy);
    } catch (const NumericalError& e) {
      throw NumericalError("finetune round " + std::to_string(round) + ": " + e.what(), static_cast<std::ptrdiff_t>(round));
    }
  }
  return result;
}

std::string metrics_csv_header() {
  return "round,mean_reward,loss_matching,loss_consistency,loss_boundary,grad_norm_theta,grad_norm_phi";
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<RoundMetrics>& metrics) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  out << metrics_csv_header() << '\n';
  char line[512];
  for (const auto& m : metrics) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", m.round, m.mean_reward,
                  m.loss_matching, m.loss_consistency, m.loss_boundary, m.grad_norm_theta, m.grad_norm_phi);
    out << line;
  }
  if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

}  // namespace vggflow::align

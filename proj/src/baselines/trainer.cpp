// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/baselines/trainer.hpp"

#include <cmath>

#include "vggflow/numcore/errors.hpp"
#include "vggflow/numcore/optim.hpp"

namespace vggflow::baselines {

std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::Refl: return "refl";
    case BaselineKind::Draft: return "draft";
    case BaselineKind::PmpAdjoint: return "pmp_adjoint";
    case BaselineKind::LeanAdjoint: return "lean_adjoint";
  }
  return "refl";
}

BaselineKind parse_baseline(std::string_view name) {
  if (name == "refl") return BaselineKind::Refl;
  if (name == "draft") return BaselineKind::Draft;
  if (name == "pmp_adjoint") return BaselineKind::PmpAdjoint;
  if (name == "lean_adjoint") return BaselineKind::LeanAdjoint;
  throw ValidationError("unknown baseline '" + std::string(name) + "'");
}

void BaselineConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ValidationError("baseline config: " + msg);
  };
  sampler.validate();
  const std::size_t n = sampler.n_steps;
  if (kind == BaselineKind::Draft) require(draft_k >= 1 && draft_k <= n, "draft_k must lie in [1, n_steps]");
  if (kind == BaselineKind::Refl) {
    require(refl_min_step < refl_max_step && refl_max_step <= n, "refl step range must satisfy min < max <= n_steps");
  }
  require(std::isfinite(beta) && beta > 0.0, "beta must be finite and > 0");
  require(bins >= 1 && bins <= n, "bins must lie in [1, n_steps]");
  require(adjoint_fd_step > 0.0, "adjoint_fd_step must be > 0");
  require(batch >= 1, "batch must be >= 1");
  require(lr >= 0.0 && weight_decay >= 0.0, "lr and weight_decay must be >= 0");
  require(grad_clip > 0.0, "grad_clip must be > 0");
  require(divergence_margin >= 0.0, "divergence_margin must be >= 0");
  if (kind == BaselineKind::Draft || kind == BaselineKind::Refl) {
    require(sampler.integrator == flow::Integrator::Euler, "refl and draft differentiate Euler steps only");
  }
  residual_net.validate();
}

namespace {

LossResult round_loss(const BaselineConfig& cfg, const flow::FinetunedField& policy, const rewards::RewardSpec& target,
                      const flow::Trajectory& traj, Rng& draws) {
  switch (cfg.kind) {
    case BaselineKind::Refl: {
      const std::size_t rows = traj.batch(), d = policy.dim();
      Tensor x = Tensor::zeros(rows, d);
      std::vector<double> t(rows);
      for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t step = cfg.refl_min_step + draws.uniform_index(cfg.refl_max_step - cfg.refl_min_step);
        const auto src = traj.states[step].row_span(i);
        std::copy(src.begin(), src.end(), x.row_span(i).begin());
        t[i] = traj.times[step];
      }
      return refl_loss(policy, target, x, t);
    }
    case BaselineKind::Draft: {
      const std::size_t start = traj.steps() - cfg.draft_k;
      return draft_loss(policy, target, traj.states[start], traj.times, start);
    }
    case BaselineKind::PmpAdjoint:
    case BaselineKind::LeanAdjoint: {
      const AdjointTrajectory adj =
          cfg.kind == BaselineKind::PmpAdjoint
              ? pmp_adjoint_solve(traj, policy, policy.base(), target, 1.0 / cfg.beta, cfg.adjoint_fd_step)
              : lean_adjoint_solve(traj, policy.base(), target, cfg.adjoint_fd_step);
      const align::TransitionBatch batch = align::subsample_transitions(traj, cfg.bins, draws);
      Tensor costates = Tensor::zeros(batch.size(), policy.dim());
      for (std::size_t r = 0; r < batch.size(); ++r) {
        const auto src = adj.at(batch.steps[r]).row_span(r / cfg.bins);
        std::copy(src.begin(), src.end(), costates.row_span(r).begin());
      }
      return align::residual_matching_loss(policy, batch.states, batch.times, costates, cfg.beta);
    }
  }
  throw ValidationError("baseline: unknown kind");
}

}  // namespace

align::TrainResult baseline_train(const BaselineConfig& cfg, const flow::FieldPtr& base,
                                  const rewards::RewardSpec& reward, const align::RoundObserver& observer) {
  cfg.validate();
  if (!base) throw ValidationError("baseline: base field is null");
  rewards::validate(reward, base->dim());
  const bool direct = cfg.kind == BaselineKind::Refl || cfg.kind == BaselineKind::Draft;
  const rewards::RewardSpec target =
      direct && cfg.relu_wrap && !rewards::is_relu_wrapped(reward) ? rewards::relu_wrap(reward) : reward;

  const Rng root(cfg.seed);
  Rng init_theta = root.split("init.theta");
  Rng noise = root.split("noise");
  Rng draws = root.split("subsample");

  align::TrainResult result{align::initial_policy(base, cfg.residual_net, init_theta), std::nullopt, {}, {}};
  flow::FinetunedField& policy = result.policy;
  OptState state;
  state.hyper.learning_rate = cfg.lr;
  state.hyper.weight_decay = cfg.weight_decay;
  align::DivergenceGuard guard(cfg.divergence_margin, cfg.divergence_patience);

  for (std::size_t round = 0; round < cfg.n_rounds; ++round) {
    try {
      const flow::Trajectory traj = flow::integrate(policy, noise.normal_matrix(cfg.batch, base->dim()), cfg.sampler);
      align::RoundMetrics m;
      m.round = round;
      m.mean_reward = rewards::mean_reward(reward, traj.terminal());
      LossResult loss = round_loss(cfg, policy, target, traj, draws);
      m.loss_matching = loss.value;
      m.grad_norm_theta = clip_global_norm(loss.theta, cfg.grad_clip);
      if (!std::isfinite(m.mean_reward) || !std::isfinite(m.loss_matching) || !std::isfinite(m.grad_norm_theta)) {
        throw NumericalError("non-finite reward, loss or gradient norm");
      }
      adamw_step(policy.residual().params(), loss.theta, state);
      if (auto w = guard.observe(round, m.mean_reward)) result.warnings.push_back(*w);
      result.metrics.push_back(m);
      if (observer) observer(m, policy);
    } catch (const NumericalError& e) {
      throw NumericalError(to_string(cfg.kind) + " round " + std::to_string(round) + ": " + e.what(),
                           static_cast<std::ptrdiff_t>(round));
    }
  }
  return result;
}

}  // namespace vggflow::baselines

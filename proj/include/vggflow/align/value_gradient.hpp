// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>
#include <string>
#include <string_view>

#include "vggflow/flow/field.hpp"
#include "vggflow/rewards/reward.hpp"

namespace vggflow::align {

enum class EtaSchedule { Quadratic, Linear };

std::string to_string(EtaSchedule e);
EtaSchedule parse_eta(std::string_view name);
double eta(EtaSchedule schedule, double t);

/// x + (1 - t) v(x, t), with v evaluated as a constant.
Tensor one_step_prediction(const flow::VelocityField& v, const Tensor& x, std::span<const double> t);

/// A model of the value gradient g(x, t) ≈ ∇V(x, t).
class GradientModel {
 public:
  virtual ~GradientModel() = default;
  virtual std::size_t dim() const = 0;
  virtual Tensor eval(const Tensor& x, std::span<const double> t) const = 0;
  /// Records g on `tape`; the default records eval() as a constant.
  virtual Var record(Tape& tape, const Tensor& x, std::span<const double> t) const;
};

inline constexpr double kNoClip = std::numeric_limits<double>::infinity();

/// g(x, t) = -η_t · clip(∇r(x̂₁)) + ν(x, t), where x̂₁ is the one-step
/// prediction under a predictor field and ν is a correction network whose
/// final layer starts at zero.
class ValueGradientField {
 public:
  ValueGradientField(rewards::RewardSpec reward, nets::Mlp correction, EtaSchedule schedule);

  static ValueGradientField initialize(const rewards::RewardSpec& reward, std::size_t dim, const nets::MlpSpec& like,
                                       EtaSchedule schedule, Rng& rng);

  std::size_t dim() const noexcept { return correction_.spec().input_dim; }
  EtaSchedule schedule() const noexcept { return schedule_; }
  const rewards::RewardSpec& reward() const noexcept { return reward_; }
  const nets::Mlp& correction() const noexcept { return correction_; }
  nets::Mlp& correction() noexcept { return correction_; }

  /// Reward gradients at the one-step predictions, before clipping and scaling.
  Tensor predicted_reward_grad(const flow::VelocityField& predictor, const Tensor& x, std::span<const double> t) const;

  /// Leading term -η_t · clip(∇r(x̂₁)); rows whose gradient norm exceeds
  /// `clip_norm` are rescaled to it.
  Tensor leading(const flow::VelocityField& predictor, const Tensor& x, std::span<const double> t,
                 double clip_norm = kNoClip) const;

  Tensor eval(const flow::VelocityField& predictor, const Tensor& x, std::span<const double> t,
              double clip_norm = kNoClip) const;

  /// Leading term as a constant plus ν with trainable weights `prefix + name`.
  Var record(Tape& tape, const flow::VelocityField& predictor, const Tensor& x, std::span<const double> t,
             double clip_norm, const std::string& prefix) const;

 private:
  rewards::RewardSpec reward_;
  nets::Mlp correction_;
  EtaSchedule schedule_;
};

/// Binds a ValueGradientField to its predictor, clip threshold and parameter
/// prefix so it can be used wherever a GradientModel is expected.
class BoundValueGradient final : public GradientModel {
 public:
  BoundValueGradient(const ValueGradientField& field, const flow::VelocityField& predictor, double clip_norm,
                     std::string prefix);
  std::size_t dim() const override { return field_.dim(); }
  Tensor eval(const Tensor& x, std::span<const double> t) const override;
  Var record(Tape& tape, const Tensor& x, std::span<const double> t) const override;

 private:
  const ValueGradientField& field_;
  const flow::VelocityField& predictor_;
  double clip_norm_;
  std::string prefix_;
};

}  // namespace vggflow::align

// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/align/value_gradient.hpp"

#include <cmath>

#include "vggflow/align/transitions.hpp"
#include "vggflow/numcore/errors.hpp"

namespace vggflow::align {

std::string to_string(EtaSchedule e) { return e == EtaSchedule::Linear ? "linear" : "quadratic"; }

EtaSchedule parse_eta(std::string_view name) {
  if (name == "quadratic") return EtaSchedule::Quadratic;
  if (name == "linear") return EtaSchedule::Linear;
  throw ValidationError("unknown eta schedule '" + std::string(name) + "'");
}

double eta(EtaSchedule schedule, double t) { return schedule == EtaSchedule::Linear ? t : t * t; }

Tensor one_step_prediction(const flow::VelocityField& v, const Tensor& x, std::span<const double> t) {
  Tensor out = v.eval(x, t);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    const double remaining = 1.0 - t[i];
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = x(i, j) + remaining * out(i, j);
  }
  return out;
}

Var GradientModel::record(Tape& tape, const Tensor& x, std::span<const double> t) const {
  return tape.constant(eval(x, t));
}

ValueGradientField::ValueGradientField(rewards::RewardSpec reward, nets::Mlp correction, EtaSchedule schedule)
    : reward_(std::move(reward)), correction_(std::move(correction)), schedule_(schedule) {
  const auto& s = correction_.spec();
  if (s.input_dim != s.output_dim) throw ValidationError("value gradient: correction network must map R^d to R^d");
  rewards::validate(reward_, s.input_dim);
}

ValueGradientField ValueGradientField::initialize(const rewards::RewardSpec& reward, std::size_t dim,
                                                  const nets::MlpSpec& like, EtaSchedule schedule, Rng& rng) {
  return ValueGradientField(reward, nets::Mlp::initialize(flow::residual_spec(dim, like), rng), schedule);
}

Tensor ValueGradientField::predicted_reward_grad(const flow::VelocityField& predictor, const Tensor& x,
                                                 std::span<const double> t) const {
  return rewards::reward_grad(reward_, one_step_prediction(predictor, x, t));
}

Tensor ValueGradientField::leading(const flow::VelocityField& predictor, const Tensor& x, std::span<const double> t,
                                   double clip_norm) const {
  Tensor grad = predicted_reward_grad(predictor, x, t);
  if (std::isfinite(clip_norm)) grad = clip_rows(grad, clip_norm);
  for (std::size_t i = 0; i < grad.rows(); ++i) {
    const double scale = -eta(schedule_, t[i]);
    for (double& v : grad.row_span(i)) v *= scale;
  }
  return grad;
}

Tensor ValueGradientField::eval(const flow::VelocityField& predictor, const Tensor& x, std::span<const double> t,
                                double clip_norm) const {
  return kernels::add(leading(predictor, x, t, clip_norm), correction_.eval(x, t));
}

Var ValueGradientField::record(Tape& tape, const flow::VelocityField& predictor, const Tensor& x,
                               std::span<const double> t, double clip_norm, const std::string& prefix) const {
  Var lead = tape.constant(leading(predictor, x, t, clip_norm));
  return tape.add(lead, correction_.record(tape, tape.constant(x), t, nets::Binding::Trainable, prefix));
}

BoundValueGradient::BoundValueGradient(const ValueGradientField& field, const flow::VelocityField& predictor,
                                       double clip_norm, std::string prefix)
    : field_(field), predictor_(predictor), clip_norm_(clip_norm), prefix_(std::move(prefix)) {}

Tensor BoundValueGradient::eval(const Tensor& x, std::span<const double> t) const {
  return field_.eval(predictor_, x, t, clip_norm_);
}

Var BoundValueGradient::record(Tape& tape, const Tensor& x, std::span<const double> t) const {
  return field_.record(tape, predictor_, x, t, clip_norm_, prefix_);
}

}  // namespace vggflow::align

// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/flow/pretrain.hpp"

#include <cmath>
#include <numbers>

#include "vggflow/numcore/errors.hpp"

namespace vggflow::flow {

PretrainResult pretrain_rectified_flow(const ToyDistribution& data, const nets::MlpSpec& spec, const PretrainConfig& cfg,
                                       Rng& rng) {
  validate(data);
  const std::size_t d = dim(data);
  if (spec.input_dim != d || spec.output_dim != d) {
    throw ValidationError("pretrain: network dims must equal the data dim " + std::to_string(d));
  }
  if (cfg.batch < 1) throw ValidationError("pretrain: batch must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw ValidationError("pretrain: learning rate must be positive");

  Rng init_rng = rng.split("pretrain.init");
  Rng data_rng = rng.split("pretrain.data");
  PretrainResult result{nets::Mlp::initialize(spec, init_rng), {}};
  result.losses.reserve(cfg.steps);
  OptState opt;
  opt.hyper.learning_rate = cfg.learning_rate;
  opt.hyper.weight_decay = cfg.weight_decay;

  const std::size_t B = cfg.batch;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const Tensor x0 = data_rng.normal_matrix(B, d);
    const Tensor x1 = sample(data, B, data_rng);
    std::vector<double> t(B);
    for (std::size_t i = 0; i < B; ++i) t[i] = (static_cast<double>(i) + data_rng.uniform()) / static_cast<double>(B);
    Tensor xt = Tensor::zeros(B, d);
    for (std::size_t i = 0; i < B; ++i)
      for (std::size_t j = 0; j < d; ++j) xt(i, j) = (1.0 - t[i]) * x0(i, j) + t[i] * x1(i, j);

    Tape tape;
    Var pred = result.net.record(tape, tape.constant(xt), t, nets::Binding::Trainable);
    Var loss = tape.scale(tape.squared_distance(pred, tape.constant(kernels::sub(x1, x0))), 1.0 / static_cast<double>(B));
    const double value = tape.value(loss).item();
    if (!std::isfinite(value)) {
      throw NumericalError("pretrain: loss is not finite at step " + std::to_string(step), static_cast<std::ptrdiff_t>(step));
    }
    result.losses.push_back(value);
    if (cfg.cosine_decay) {
      const double progress = static_cast<double>(step) / static_cast<double>(cfg.steps);
      opt.hyper.learning_rate = 0.5 * cfg.learning_rate * (1.0 + std::cos(std::numbers::pi * progress));
    }
    adamw_step(result.net.params(), backward(tape, loss), opt);
  }
  return result;
}

}  // namespace vggflow::flow

// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vggflow/numcore/rng.hpp"
#include "vggflow/numcore/tape.hpp"

namespace vggflow::nets {

enum class Activation { Silu, Tanh, Relu, Identity };
enum class FinalInit { Standard, Tiny };

std::string to_string(Activation a);
std::string to_string(FinalInit f);
Activation parse_activation(std::string_view name);
FinalInit parse_final_init(std::string_view name);

struct MlpSpec {
  std::size_t input_dim = 2;
  std::size_t time_embed_dim = 8;
  std::vector<std::size_t> hidden{64, 64};
  Activation activation = Activation::Silu;
  std::size_t output_dim = 2;
  FinalInit final_init = FinalInit::Standard;

  void validate() const;
  /// Width of the network input: x, then t, then the time embedding.
  std::size_t network_input() const { return input_dim + 1 + time_embed_dim; }

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

/// Sinusoidal embedding [sin(2π f_k t), cos(2π f_k t)] with f_k = 2^(k-1),
/// k = 1..dim/2; all sines first. Returns a `[1, dim]` row.
Tensor time_embed(double t, std::size_t dim);
/// Row i embeds t[i]; `[t.size(), dim]`.
Tensor time_embed(std::span<const double> t, std::size_t dim);
/// Row i is [t[i], time_embed(t[i])]. The raw time separates t = 0 from
/// t = 1, which the periodic embedding maps to the same point.
Tensor time_features(std::span<const double> t, std::size_t dim);

/// How an Mlp puts its weights on a tape: as constants (gradients flow only
/// through the input) or as named parameters.
enum class Binding { Frozen, Trainable };

std::string layer_weight_name(std::size_t layer);
std::string layer_bias_name(std::size_t layer);

/// Multilayer perceptron on (x, time_features(t)). Weights are `[in, out]`,
/// biases `[1, out]`, and a batch is a `[rows, input_dim]` tensor.
class Mlp {
 public:
  Mlp(MlpSpec spec, ParamSet params);

  /// He fan-in normal init for every layer; biases zero. The final layer is
  /// all zeros under FinalInit::Tiny, so the network outputs exactly 0.
  static Mlp initialize(const MlpSpec& spec, Rng& rng);

  const MlpSpec& spec() const noexcept { return spec_; }
  const ParamSet& params() const noexcept { return params_; }
  ParamSet& params() noexcept { return params_; }

  Tensor eval(const Tensor& x, std::span<const double> t) const;

  /// Same computation as eval(), recorded on `tape`. Trainable parameters
  /// are registered as `prefix + layer name`.
  Var record(Tape& tape, Var x, std::span<const double> t, Binding binding, const std::string& prefix = "") const;

 private:
  void check_input(const Tensor& x, std::span<const double> t) const;

  MlpSpec spec_;
  ParamSet params_;
};

/// Gradients whose names start with `prefix`, with the prefix removed.
GradMap strip_prefix(const GradMap& grads, const std::string& prefix);

}  // namespace vggflow::nets

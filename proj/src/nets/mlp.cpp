// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/nets/mlp.hpp"

#include <cmath>
#include <numbers>

#include "vggflow/numcore/errors.hpp"

namespace vggflow::nets {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Silu: return "silu";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
  }
  return "?";
}

std::string to_string(FinalInit f) { return f == FinalInit::Tiny ? "tiny" : "standard"; }

Activation parse_activation(std::string_view name) {
  if (name == "silu") return Activation::Silu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  if (name == "identity") return Activation::Identity;
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

FinalInit parse_final_init(std::string_view name) {
  if (name == "standard") return FinalInit::Standard;
  if (name == "tiny") return FinalInit::Tiny;
  throw ValidationError("unknown final-layer init '" + std::string(name) + "'");
}

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1) throw ValidationError("mlp: input and output dims must be >= 1");
  if (time_embed_dim % 2 != 0) throw ValidationError("mlp: time embedding dim must be even");
  for (std::size_t w : hidden)
    if (w < 1) throw ValidationError("mlp: hidden widths must be >= 1");
}

Tensor time_embed(double t, std::size_t dim) { return time_embed(std::span<const double>(&t, 1), dim); }

Tensor time_embed(std::span<const double> t, std::size_t dim) {
  if (dim % 2 != 0) throw ValidationError("time_embed: dim must be even, got " + std::to_string(dim));
  const std::size_t half = dim / 2;
  Tensor out = Tensor::zeros(t.size(), dim);
  for (std::size_t i = 0; i < t.size(); ++i) {
    double freq = 1.0;
    for (std::size_t k = 0; k < half; ++k) {
      const double arg = 2.0 * std::numbers::pi * freq * t[i];
      out(i, k) = std::sin(arg);
      out(i, half + k) = std::cos(arg);
      freq *= 2.0;
    }
  }
  return out;
}

Tensor time_features(std::span<const double> t, std::size_t dim) {
  Tensor raw = Tensor::zeros(t.size(), 1);
  for (std::size_t i = 0; i < t.size(); ++i) raw(i, 0) = t[i];
  return kernels::concat_cols(raw, time_embed(t, dim));
}

std::string layer_weight_name(std::size_t layer) { return "layer" + std::to_string(layer) + ".weight"; }
std::string layer_bias_name(std::size_t layer) { return "layer" + std::to_string(layer) + ".bias"; }

namespace {

std::vector<std::size_t> layer_widths(const MlpSpec& spec) {
  std::vector<std::size_t> widths{spec.network_input()};
  widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
  widths.push_back(spec.output_dim);
  return widths;
}

Tensor apply(Activation a, const Tensor& x) {
  switch (a) {
    case Activation::Silu: return kernels::silu(x);
    case Activation::Tanh: return kernels::tanh(x);
    case Activation::Relu: return kernels::relu(x);
    case Activation::Identity: return x;
  }
  return x;
}

Var apply(Tape& tape, Activation a, Var x) {
  switch (a) {
    case Activation::Silu: return tape.silu(x);
    case Activation::Tanh: return tape.tanh(x);
    case Activation::Relu: return tape.relu(x);
    case Activation::Identity: return x;
  }
  return x;
}

}  // namespace

Mlp::Mlp(MlpSpec spec, ParamSet params) : spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
  const auto widths = layer_widths(spec_);
  const std::size_t layers = widths.size() - 1;
  if (params_.size() != 2 * layers) {
    throw ValidationError("mlp: expected " + std::to_string(2 * layers) + " tensors, got " +
                          std::to_string(params_.size()));
  }
  for (std::size_t l = 0; l < layers; ++l) {
    auto w = params_.find(layer_weight_name(l));
    auto b = params_.find(layer_bias_name(l));
    if (w == params_.end() || b == params_.end()) {
      throw ValidationError("mlp: missing tensors for layer " + std::to_string(l));
    }
    const Shape ws{widths[l], widths[l + 1]};
    const Shape bs{1, widths[l + 1]};
    if (w->second.shape() != ws || b->second.shape() != bs) {
      throw ValidationError("mlp: layer " + std::to_string(l) + " has shapes " + shape_string(w->second.shape()) +
                            "/" + shape_string(b->second.shape()) + ", expected " + shape_string(ws) + "/" +
                            shape_string(bs));
    }
  }
}

Mlp Mlp::initialize(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  const auto widths = layer_widths(spec);
  const std::size_t layers = widths.size() - 1;
  ParamSet params;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t fan_in = widths[l], fan_out = widths[l + 1];
    const bool last = l + 1 == layers;
    Tensor w = Tensor::zeros(fan_in, fan_out);
    if (!(last && spec.final_init == FinalInit::Tiny)) {
      const double gain = last ? 1.0 : 2.0;
      w = rng.normal_matrix(fan_in, fan_out, std::sqrt(gain / static_cast<double>(fan_in)));
    }
    params.emplace(layer_weight_name(l), std::move(w));
    params.emplace(layer_bias_name(l), Tensor::zeros(1, fan_out));
  }
  return Mlp(spec, std::move(params));
}

void Mlp::check_input(const Tensor& x, std::span<const double> t) const {
  if (x.rank() != 2 || x.cols() != spec_.input_dim) {
    throw ValidationError("mlp: input shape " + shape_string(x.shape()) + " does not have " +
                          std::to_string(spec_.input_dim) + " columns");
  }
  if (t.size() != x.rows()) {
    throw ValidationError("mlp: " + std::to_string(t.size()) + " times for " + std::to_string(x.rows()) + " rows");
  }
}

Tensor Mlp::eval(const Tensor& x, std::span<const double> t) const {
  check_input(x, t);
  const std::size_t layers = spec_.hidden.size() + 1;
  Tensor h = kernels::concat_cols(x, time_features(t, spec_.time_embed_dim));
  for (std::size_t l = 0; l < layers; ++l) {
    h = kernels::add(kernels::matmul(h, params_.at(layer_weight_name(l))), params_.at(layer_bias_name(l)));
    if (l + 1 < layers) h = apply(spec_.activation, h);
  }
  return h;
}

Var Mlp::record(Tape& tape, Var x, std::span<const double> t, Binding binding, const std::string& prefix) const {
  check_input(tape.value(x), t);
  const std::size_t layers = spec_.hidden.size() + 1;
  auto bind = [&](const std::string& name) {
    const Tensor& v = params_.at(name);
    return binding == Binding::Trainable ? tape.param(prefix + name, v) : tape.constant(v);
  };
  Var h = tape.concat(x, tape.constant(time_features(t, spec_.time_embed_dim)));
  for (std::size_t l = 0; l < layers; ++l) {
    h = tape.add(tape.matmul(h, bind(layer_weight_name(l))), bind(layer_bias_name(l)));
    if (l + 1 < layers) h = apply(tape, spec_.activation, h);
  }
  return h;
}

GradMap strip_prefix(const GradMap& grads, const std::string& prefix) {
  GradMap out;
  for (const auto& [name, g] : grads) {
    if (name.starts_with(prefix)) out.emplace(name.substr(prefix.size()), g);
  }
  return out;
}

}  // namespace vggflow::nets

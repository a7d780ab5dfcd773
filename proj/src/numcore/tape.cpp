// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/numcore/tape.hpp"

#include <cmath>
#include <optional>

#include "vggflow/numcore/errors.hpp"

namespace vggflow {

const Tensor& Var::value() const {
  if (!tape_) throw ValidationError("value() on an unbound Var");
  return tape_->value(*this);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tape::Node& Tape::node(Var v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) throw ValidationError("Var does not belong to this tape");
  return nodes_[v.id()];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

Var Tape::param(const std::string& name, const Tensor& value) {
  if (auto it = params_.find(name); it != params_.end()) return Var(this, it->second);
  Var v = push({.op = OpKind::Param, .value = value});
  params_.emplace(name, v.id());
  return v;
}

Var Tape::constant(Tensor value) { return push({.op = OpKind::Constant, .value = std::move(value)}); }

Var Tape::matmul(Var a, Var b) {
  return push({.op = OpKind::MatMul, .lhs = a.id(), .rhs = b.id(), .value = kernels::matmul(value(a), value(b))});
}

Var Tape::add(Var a, Var b) {
  return push({.op = OpKind::Add, .lhs = a.id(), .rhs = b.id(), .value = kernels::add(value(a), value(b))});
}

Var Tape::sub(Var a, Var b) {
  return push({.op = OpKind::Sub, .lhs = a.id(), .rhs = b.id(), .value = kernels::sub(value(a), value(b))});
}

Var Tape::mul(Var a, Var b) {
  return push({.op = OpKind::Mul, .lhs = a.id(), .rhs = b.id(), .value = kernels::mul(value(a), value(b))});
}

Var Tape::scale(Var a, double s) {
  return push({.op = OpKind::Scale, .lhs = a.id(), .factor = s, .value = kernels::scale(value(a), s)});
}

Var Tape::sum(Var a) {
  return push({.op = OpKind::Sum, .lhs = a.id(), .value = Tensor::scalar(kernels::sum(value(a)))});
}

Var Tape::mean(Var a) {
  const Tensor& x = value(a);
  if (x.empty()) throw ValidationError("mean of an empty tensor");
  return push({.op = OpKind::Mean,
               .lhs = a.id(),
               .value = Tensor::scalar(kernels::sum(x) / static_cast<double>(x.size()))});
}

Var Tape::tanh(Var a) { return push({.op = OpKind::Tanh, .lhs = a.id(), .value = kernels::tanh(value(a))}); }

Var Tape::silu(Var a) { return push({.op = OpKind::Silu, .lhs = a.id(), .value = kernels::silu(value(a))}); }

Var Tape::relu(Var a) { return push({.op = OpKind::Relu, .lhs = a.id(), .value = kernels::relu(value(a))}); }

Var Tape::square(Var a) { return push({.op = OpKind::Square, .lhs = a.id(), .value = kernels::square(value(a))}); }

Var Tape::squared_distance(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (x.shape() != y.shape()) {
    throw ValidationError("squared_distance: shapes differ, " + shape_string(x.shape()) + " vs " +
                          shape_string(y.shape()));
  }
  return push({.op = OpKind::SquaredDistance,
               .lhs = a.id(),
               .rhs = b.id(),
               .value = Tensor::scalar(kernels::squared_norm(kernels::sub(x, y)))});
}

Var Tape::concat(Var a, Var b) {
  return push({.op = OpKind::Concat, .lhs = a.id(), .rhs = b.id(), .value = kernels::concat_cols(value(a), value(b))});
}

Var Tape::slice(Var a, std::size_t begin, std::size_t end) {
  return push({.op = OpKind::Slice,
               .lhs = a.id(),
               .begin = begin,
               .end = end,
               .value = kernels::slice_cols(value(a), begin, end)});
}

Var Tape::stop_gradient(Var a) { return push({.op = OpKind::StopGradient, .lhs = a.id(), .value = value(a)}); }

namespace {

// Sums `g` down to the shape of a broadcast operand.
Tensor reduce_to(const Tensor& g, const Shape& target) {
  if (g.shape() == target) return g;
  const std::size_t r = g.rows(), c = g.cols();
  if (target[0] == 1 && target[1] == 1) return Tensor::scalar(kernels::sum(g));
  if (target[0] == 1) {
    Tensor out = Tensor::zeros(1, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out(0, j) += g(i, j);
    return out;
  }
  Tensor out = Tensor::zeros(r, 1);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(i, 0) += g(i, j);
  return out;
}

void accumulate(std::optional<Tensor>& slot, const Tensor& g) {
  if (!slot) {
    slot = g;
  } else {
    kernels::axpy(*slot, 1.0, g);
  }
}

}  // namespace

GradMap backward(const Tape& tape, Var output) {
  const Tensor& out = tape.value(output);
  if (out.size() != 1) {
    throw ValidationError("backward: output must be scalar, got shape " + shape_string(out.shape()));
  }

  std::vector<std::optional<Tensor>> grads(output.id() + 1);
  grads[output.id()] = Tensor(out.shape(), {1.0});

  for (std::size_t id = output.id() + 1; id-- > 0;) {
    if (!grads[id]) continue;
    const auto& node = tape.nodes_[id];
    const Tensor& g = *grads[id];
    if (!node.value.all_finite()) {
      throw NumericalError("backward: non-finite value at node " + std::to_string(id), static_cast<std::ptrdiff_t>(id));
    }
    if (!g.all_finite()) {
      throw NumericalError("backward: non-finite gradient at node " + std::to_string(id),
                           static_cast<std::ptrdiff_t>(id));
    }
    auto lhs_value = [&]() -> const Tensor& { return tape.nodes_[node.lhs].value; };
    auto rhs_value = [&]() -> const Tensor& { return tape.nodes_[node.rhs].value; };

    switch (node.op) {
      case OpKind::Param:
      case OpKind::Constant:
      case OpKind::StopGradient:
        break;
      case OpKind::MatMul:
        accumulate(grads[node.lhs], kernels::matmul(g, kernels::transpose(rhs_value())));
        accumulate(grads[node.rhs], kernels::matmul(kernels::transpose(lhs_value()), g));
        break;
      case OpKind::Add:
        accumulate(grads[node.lhs], g);
        accumulate(grads[node.rhs], reduce_to(g, rhs_value().shape()));
        break;
      case OpKind::Sub:
        accumulate(grads[node.lhs], g);
        accumulate(grads[node.rhs], kernels::scale(reduce_to(g, rhs_value().shape()), -1.0));
        break;
      case OpKind::Mul:
        accumulate(grads[node.lhs], kernels::mul(g, rhs_value()));
        accumulate(grads[node.rhs], reduce_to(kernels::mul(g, lhs_value()), rhs_value().shape()));
        break;
      case OpKind::Scale:
        accumulate(grads[node.lhs], kernels::scale(g, node.factor));
        break;
      case OpKind::Sum: {
        const Tensor& x = lhs_value();
        accumulate(grads[node.lhs], Tensor(x.shape(), std::vector<double>(x.size(), g.item())));
        break;
      }
      case OpKind::Mean: {
        const Tensor& x = lhs_value();
        const double v = g.item() / static_cast<double>(x.size());
        accumulate(grads[node.lhs], Tensor(x.shape(), std::vector<double>(x.size(), v)));
        break;
      }
      case OpKind::Tanh: {
        Tensor d = node.value;
        for (double& y : d.data()) y = 1.0 - y * y;
        accumulate(grads[node.lhs], kernels::mul(g, d));
        break;
      }
      case OpKind::Silu: {
        Tensor d = lhs_value();
        for (double& x : d.data()) {
          const double s = 1.0 / (1.0 + std::exp(-x));
          x = s * (1.0 + x * (1.0 - s));
        }
        accumulate(grads[node.lhs], kernels::mul(g, d));
        break;
      }
      case OpKind::Relu: {
        Tensor d = lhs_value();
        for (double& x : d.data()) x = x > 0.0 ? 1.0 : 0.0;
        accumulate(grads[node.lhs], kernels::mul(g, d));
        break;
      }
      case OpKind::Square:
        accumulate(grads[node.lhs], kernels::mul(g, kernels::scale(lhs_value(), 2.0)));
        break;
      case OpKind::SquaredDistance: {
        Tensor d = kernels::scale(kernels::sub(lhs_value(), rhs_value()), 2.0 * g.item());
        accumulate(grads[node.rhs], kernels::scale(d, -1.0));
        accumulate(grads[node.lhs], d);
        break;
      }
      case OpKind::Concat: {
        const std::size_t ca = lhs_value().cols();
        accumulate(grads[node.lhs], kernels::slice_cols(g, 0, ca));
        accumulate(grads[node.rhs], kernels::slice_cols(g, ca, g.cols()));
        break;
      }
      case OpKind::Slice: {
        const Tensor& x = lhs_value();
        Tensor full = Tensor::zeros(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i)
          for (std::size_t j = node.begin; j < node.end; ++j) full(i, j) = g(i, j - node.begin);
        accumulate(grads[node.lhs], full);
        break;
      }
    }
  }

  GradMap result;
  for (const auto& [name, id] : tape.params_) {
    const Tensor& v = tape.nodes_[id].value;
    if (id < grads.size() && grads[id]) {
      result.emplace(name, std::move(*grads[id]));
    } else {
      result.emplace(name, Tensor(v.shape(), std::vector<double>(v.size(), 0.0)));
    }
  }
  return result;
}

Var operator+(Var a, Var b) { return a.tape()->add(a, b); }
Var operator-(Var a, Var b) { return a.tape()->sub(a, b); }
Var operator*(Var a, Var b) { return a.tape()->mul(a, b); }
Var operator*(Var a, double s) { return a.tape()->scale(a, s); }
Var operator*(double s, Var a) { return a.tape()->scale(a, s); }

double global_norm(const GradMap& grads) {
  double s = 0.0;
  for (const auto& [name, g] : grads) s += kernels::squared_norm(g);
  return std::sqrt(s);
}

}  // namespace vggflow

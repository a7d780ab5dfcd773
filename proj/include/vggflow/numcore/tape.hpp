// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "vggflow/numcore/tensor.hpp"

namespace vggflow {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

enum class OpKind {
  Param,
  Constant,
  MatMul,
  Add,
  Sub,
  Mul,
  Scale,
  Sum,
  Mean,
  Tanh,
  Silu,
  Relu,
  Square,
  SquaredDistance,
  Concat,
  Slice,
  StopGradient,
};

/// Name → tensor map. Used for both parameters (θ, φ) and their gradients.
using ParamSet = std::map<std::string, Tensor>;
using GradMap = std::map<std::string, Tensor>;

/// Append-only record of a forward computation for reverse-mode differentiation.
///
/// Nodes are stored in creation order, so parents always precede children.
/// A tape is confined to one thread and must outlive every Var it hands out.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers a named parameter leaf. Registering the same name twice
  /// returns the existing leaf.
  Var param(const std::string& name, const Tensor& value);
  Var constant(Tensor value);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var sum(Var a);
  Var mean(Var a);
  Var tanh(Var a);
  Var silu(Var a);
  Var relu(Var a);
  Var square(Var a);
  /// Sum of squared elementwise differences, a scalar.
  Var squared_distance(Var a, Var b);
  Var concat(Var a, Var b);
  Var slice(Var a, std::size_t begin, std::size_t end);
  /// Forwards the value; contributes nothing to any gradient.
  Var stop_gradient(Var a);

  const Tensor& value(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  OpKind kind(std::size_t id) const { return nodes_.at(id).op; }
  const std::map<std::string, std::size_t>& params() const noexcept { return params_; }

 private:
  struct Node {
    OpKind op;
    std::size_t lhs = 0;
    std::size_t rhs = 0;
    double factor = 0.0;
    std::size_t begin = 0;
    std::size_t end = 0;
    Tensor value;
  };

  Var push(Node node);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> params_;

  friend GradMap backward(const Tape& tape, Var output);
};

/// Reverse-mode gradient of a scalar output with respect to every parameter
/// registered on the tape. Parameters the output does not reach (or reaches
/// only through stop-gradient nodes) get all-zero gradients.
///
/// Throws ValidationError for a non-scalar output and NumericalError (with
/// the node id) when a non-finite value or gradient is met.
GradMap backward(const Tape& tape, Var output);

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator*(Var a, double s);
Var operator*(double s, Var a);

double global_norm(const GradMap& grads);

}  // namespace vggflow

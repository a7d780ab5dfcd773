// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vggflow/nets/mlp.hpp"
#include "vggflow/numcore/tape.hpp"

namespace vggflow::flow {

/// A time-dependent velocity field v(x, t) on batches: `x` is `[n, d]` and
/// `t` holds one time per row.
class VelocityField {
 public:
  virtual ~VelocityField() = default;

  virtual std::size_t dim() const = 0;
  virtual Tensor eval(const Tensor& x, std::span<const double> t) const = 0;

  /// Records v(x, t) on `tape`, differentiable in `x` only. Fields without a
  /// tape form throw ValidationError.
  virtual Var record(Tape& tape, Var x, std::span<const double> t) const;

  /// Evaluates every row at the same time.
  Tensor eval_at(const Tensor& x, double t) const;
};

using FieldPtr = std::shared_ptr<const VelocityField>;

std::vector<double> repeat_time(std::size_t n, double t);

/// Neural field backed by an Mlp with input and output width d.
class MlpField final : public VelocityField {
 public:
  explicit MlpField(nets::Mlp net);
  std::size_t dim() const override { return net_.spec().input_dim; }
  Tensor eval(const Tensor& x, std::span<const double> t) const override;
  Var record(Tape& tape, Var x, std::span<const double> t) const override;
  const nets::Mlp& net() const noexcept { return net_; }

 private:
  nets::Mlp net_;
};

/// v(x, t) = A x with A `[d, d]`.
class LinearField final : public VelocityField {
 public:
  explicit LinearField(Tensor A);
  std::size_t dim() const override { return A_.rows(); }
  Tensor eval(const Tensor& x, std::span<const double> t) const override;
  Var record(Tape& tape, Var x, std::span<const double> t) const override;
  const Tensor& matrix() const noexcept { return A_; }

 private:
  Tensor A_;
  Tensor At_;
};

/// v(x, t) = c for a `[1, d]` row c.
class ConstantField final : public VelocityField {
 public:
  explicit ConstantField(Tensor c);
  std::size_t dim() const override { return c_.cols(); }
  Tensor eval(const Tensor& x, std::span<const double> t) const override;
  Var record(Tape& tape, Var x, std::span<const double> t) const override;

 private:
  Tensor c_;
};

/// Pointwise field from a callable; eval only.
class LambdaField final : public VelocityField {
 public:
  using Fn = std::function<void(std::span<const double> x, double t, std::span<double> out)>;
  LambdaField(std::size_t dim, Fn fn);
  std::size_t dim() const override { return dim_; }
  Tensor eval(const Tensor& x, std::span<const double> t) const override;

 private:
  std::size_t dim_;
  Fn fn_;
};

/// Base field plus a residual network: v(x, t) = base(x, t) + residual(x, t).
class FinetunedField final : public VelocityField {
 public:
  FinetunedField(FieldPtr base, nets::Mlp residual);

  std::size_t dim() const override { return base_->dim(); }
  Tensor eval(const Tensor& x, std::span<const double> t) const override;
  Var record(Tape& tape, Var x, std::span<const double> t) const override;

  /// Records base + residual with the residual's weights as trainable
  /// parameters named `prefix + layer name`.
  Var record_trainable(Tape& tape, Var x, std::span<const double> t, const std::string& prefix) const;
  /// Residual output alone, with trainable weights.
  Var record_residual(Tape& tape, Var x, std::span<const double> t, const std::string& prefix) const;
  Tensor eval_residual(const Tensor& x, std::span<const double> t) const;

  const VelocityField& base() const noexcept { return *base_; }
  const FieldPtr& base_ptr() const noexcept { return base_; }
  const nets::Mlp& residual() const noexcept { return residual_; }
  nets::Mlp& residual() noexcept { return residual_; }

 private:
  FieldPtr base_;
  nets::Mlp residual_;
};

/// Residual spec mirroring a base Mlp spec with a zero final layer.
nets::MlpSpec residual_spec(std::size_t dim, const nets::MlpSpec& like);

}  // namespace vggflow::flow

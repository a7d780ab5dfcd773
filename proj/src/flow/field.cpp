// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/flow/field.hpp"

#include "vggflow/numcore/errors.hpp"

namespace vggflow::flow {
namespace {

void check_batch(const Tensor& x, std::span<const double> t, std::size_t dim) {
  if (x.rank() != 2 || x.cols() != dim) {
    throw ValidationError("velocity field: expected " + std::to_string(dim) + " columns, got shape " +
                          shape_string(x.shape()));
  }
  if (t.size() != x.rows()) throw ValidationError("velocity field: one time per row required");
}

}  // namespace

Var VelocityField::record(Tape&, Var, std::span<const double>) const {
  throw ValidationError("velocity field has no differentiable form");
}

Tensor VelocityField::eval_at(const Tensor& x, double t) const { return eval(x, repeat_time(x.rows(), t)); }

std::vector<double> repeat_time(std::size_t n, double t) { return std::vector<double>(n, t); }

MlpField::MlpField(nets::Mlp net) : net_(std::move(net)) {
  if (net_.spec().input_dim != net_.spec().output_dim) {
    throw ValidationError("velocity network must map R^d to R^d");
  }
}

Tensor MlpField::eval(const Tensor& x, std::span<const double> t) const { return net_.eval(x, t); }

Var MlpField::record(Tape& tape, Var x, std::span<const double> t) const {
  return net_.record(tape, x, t, nets::Binding::Frozen);
}

LinearField::LinearField(Tensor A) : A_(std::move(A)) {
  if (A_.rank() != 2 || A_.rows() != A_.cols() || A_.rows() == 0) throw ValidationError("linear field: A must be square");
  At_ = kernels::transpose(A_);
}

Tensor LinearField::eval(const Tensor& x, std::span<const double> t) const {
  check_batch(x, t, dim());
  return kernels::matmul(x, At_);
}

Var LinearField::record(Tape& tape, Var x, std::span<const double> t) const {
  check_batch(tape.value(x), t, dim());
  return tape.matmul(x, tape.constant(At_));
}

ConstantField::ConstantField(Tensor c) : c_(std::move(c)) {
  if (c_.rank() != 2 || c_.rows() != 1 || c_.cols() == 0) throw ValidationError("constant field: c must be a [1, d] row");
}

Tensor ConstantField::eval(const Tensor& x, std::span<const double> t) const {
  check_batch(x, t, dim());
  return kernels::add(Tensor::zeros(x.rows(), x.cols()), c_);
}

Var ConstantField::record(Tape& tape, Var x, std::span<const double> t) const {
  check_batch(tape.value(x), t, dim());
  return tape.add(tape.scale(x, 0.0), tape.constant(c_));
}

LambdaField::LambdaField(std::size_t dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {
  if (dim_ == 0 || !fn_) throw ValidationError("lambda field: need a positive dim and a callable");
}

Tensor LambdaField::eval(const Tensor& x, std::span<const double> t) const {
  check_batch(x, t, dim_);
  Tensor out = Tensor::zeros(x.rows(), dim_);
  for (std::size_t i = 0; i < x.rows(); ++i) fn_(x.row_span(i), t[i], out.row_span(i));
  return out;
}

FinetunedField::FinetunedField(FieldPtr base, nets::Mlp residual) : base_(std::move(base)), residual_(std::move(residual)) {
  if (!base_) throw ValidationError("finetuned field: missing base");
  const auto& s = residual_.spec();
  if (s.input_dim != base_->dim() || s.output_dim != base_->dim()) {
    throw ValidationError("finetuned field: residual dims do not match the base");
  }
}

Tensor FinetunedField::eval(const Tensor& x, std::span<const double> t) const {
  return kernels::add(base_->eval(x, t), residual_.eval(x, t));
}

Tensor FinetunedField::eval_residual(const Tensor& x, std::span<const double> t) const { return residual_.eval(x, t); }

Var FinetunedField::record(Tape& tape, Var x, std::span<const double> t) const {
  return tape.add(base_->record(tape, x, t), residual_.record(tape, x, t, nets::Binding::Frozen));
}

Var FinetunedField::record_trainable(Tape& tape, Var x, std::span<const double> t, const std::string& prefix) const {
  return tape.add(base_->record(tape, x, t), record_residual(tape, x, t, prefix));
}

Var FinetunedField::record_residual(Tape& tape, Var x, std::span<const double> t, const std::string& prefix) const {
  return residual_.record(tape, x, t, nets::Binding::Trainable, prefix);
}

nets::MlpSpec residual_spec(std::size_t dim, const nets::MlpSpec& like) {
  nets::MlpSpec spec = like;
  spec.input_dim = dim;
  spec.output_dim = dim;
  spec.final_init = nets::FinalInit::Tiny;
  return spec;
}

}  // namespace vggflow::flow

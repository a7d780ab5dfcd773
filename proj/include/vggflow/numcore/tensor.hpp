// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace vggflow {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major float64 array.
///
/// Most of the library works with rank-2 tensors: a batch of row vectors
/// `[rows, cols]`, with scalars stored as `[1, 1]`. Other ranks are only
/// stored and serialized.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor filled(std::size_t rows, std::size_t cols, double value);
  static Tensor scalar(double value);
  /// `[1, n]` row vector.
  static Tensor row(std::span<const double> values);
  /// `[n, 1]` column vector.
  static Tensor column(std::span<const double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);
  static Tensor identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  const std::vector<double>& vector() const noexcept { return data_; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  std::span<const double> row_span(std::size_t r) const;
  std::span<double> row_span(std::size_t r);

  /// Value of a single-element tensor.
  double item() const;
  bool all_finite() const noexcept;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

namespace kernels {

// Plain (untaped) kernels. The tape records exactly these computations, so
// an untaped evaluation and a taped one produce bitwise-identical values.

Tensor matmul(const Tensor& a, const Tensor& b);
/// `b` may match `a`, or be `[1, cols]`, `[rows, 1]` or `[1, 1]` (broadcast).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor tanh(const Tensor& a);
Tensor silu(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor square(const Tensor& a);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor transpose(const Tensor& a);
double sum(const Tensor& a);
/// Per-row dot product of equally shaped tensors, `[rows, 1]`.
Tensor row_dot(const Tensor& a, const Tensor& b);
/// Per-row Euclidean norms.
std::vector<double> row_norms(const Tensor& a);
/// Adds `s * b` to `a` in place.
void axpy(Tensor& a, double s, const Tensor& b);
double squared_norm(const Tensor& a);

}  // namespace kernels

}  // namespace vggflow

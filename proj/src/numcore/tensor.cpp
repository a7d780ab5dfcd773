// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/numcore/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "vggflow/numcore/errors.hpp"

namespace vggflow {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw ValidationError("tensor data length " + std::to_string(data_.size()) +
                          " does not match shape " + shape_string(shape_));
  }
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) { return filled(rows, cols, 0.0); }

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double value) {
  return Tensor({rows, cols}, std::vector<double>(rows * cols, value));
}

Tensor Tensor::scalar(double value) { return Tensor({1, 1}, {value}); }

Tensor Tensor::row(std::span<const double> values) {
  return Tensor({1, values.size()}, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::column(std::span<const double> values) {
  return Tensor({values.size(), 1}, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor out = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

std::size_t Tensor::rows() const {
  if (shape_.size() != 2) throw ValidationError("expected a rank-2 tensor, got " + shape_string(shape_));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() != 2) throw ValidationError("expected a rank-2 tensor, got " + shape_string(shape_));
  return shape_[1];
}

std::span<const double> Tensor::row_span(std::size_t r) const {
  const std::size_t c = cols();
  return std::span<const double>(data_).subspan(r * c, c);
}

std::span<double> Tensor::row_span(std::size_t r) {
  const std::size_t c = cols();
  return std::span<double>(data_).subspan(r * c, c);
}

double Tensor::item() const {
  if (data_.size() != 1) throw ValidationError("item() on tensor of shape " + shape_string(shape_));
  return data_[0];
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace kernels {
namespace {

enum class Broadcast { Same, Row, Column, Scalar };

Broadcast classify(const Tensor& a, const Tensor& b, const char* op) {
  const std::size_t r = a.rows(), c = a.cols();
  const std::size_t br = b.rows(), bc = b.cols();
  if (br == r && bc == c) return Broadcast::Same;
  if (br == 1 && bc == 1) return Broadcast::Scalar;
  if (br == 1 && bc == c) return Broadcast::Row;
  if (br == r && bc == 1) return Broadcast::Column;
  throw ValidationError(std::string(op) + ": cannot broadcast " + shape_string(b.shape()) + " onto " +
                        shape_string(a.shape()));
}

template <typename F>
Tensor binary(const Tensor& a, const Tensor& b, const char* op, F f) {
  const Broadcast kind = classify(a, b, op);
  const std::size_t r = a.rows(), c = a.cols();
  Tensor out = Tensor::zeros(r, c);
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      double bv = 0.0;
      switch (kind) {
        case Broadcast::Same: bv = y[i * c + j]; break;
        case Broadcast::Row: bv = y[j]; break;
        case Broadcast::Column: bv = y[i]; break;
        case Broadcast::Scalar: bv = y[0]; break;
      }
      o[i * c + j] = f(x[i * c + j], bv);
    }
  }
  return out;
}

template <typename F>
Tensor unary(const Tensor& a, F f) {
  Tensor out(a.shape(), std::vector<double>(a.size()));
  auto o = out.data();
  auto x = a.data();
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = f(x[i]);
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ValidationError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                          shape_string(b.shape()));
  }
  Tensor out = Tensor::zeros(m, n);
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = o.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = x[i * k + p];
      const double* yrow = y.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += s * yrow[j];
    }
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(a, b, "mul", [](double x, double y) { return x * y; });
}

Tensor scale(const Tensor& a, double s) {
  return unary(a, [s](double x) { return s * x; });
}

Tensor tanh(const Tensor& a) {
  return unary(a, [](double x) { return std::tanh(x); });
}

Tensor silu(const Tensor& a) {
  return unary(a, [](double x) { return x / (1.0 + std::exp(-x)); });
}

Tensor relu(const Tensor& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; });
}

Tensor square(const Tensor& a) {
  return unary(a, [](double x) { return x * x; });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  const std::size_t r = a.rows();
  if (b.rows() != r) {
    throw ValidationError("concat: row counts differ, " + shape_string(a.shape()) + " vs " +
                          shape_string(b.shape()));
  }
  const std::size_t ca = a.cols(), cb = b.cols();
  Tensor out = Tensor::zeros(r, ca + cb);
  for (std::size_t i = 0; i < r; ++i) {
    auto dst = out.row_span(i);
    auto ra = a.row_span(i);
    auto rb = b.row_span(i);
    std::copy(ra.begin(), ra.end(), dst.begin());
    std::copy(rb.begin(), rb.end(), dst.begin() + static_cast<std::ptrdiff_t>(ca));
  }
  return out;
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.cols()) {
    throw ValidationError("slice: bad column range [" + std::to_string(begin) + ", " + std::to_string(end) +
                          ") for " + shape_string(a.shape()));
  }
  const std::size_t r = a.rows();
  Tensor out = Tensor::zeros(r, end - begin);
  for (std::size_t i = 0; i < r; ++i) {
    auto src = a.row_span(i);
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(begin), src.begin() + static_cast<std::ptrdiff_t>(end),
              out.row_span(i).begin());
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  Tensor out = Tensor::zeros(c, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(j, i) = a(i, j);
  return out;
}

double sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return s;
}

Tensor row_dot(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ValidationError("row_dot: shapes differ, " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  const std::size_t r = a.rows();
  Tensor out = Tensor::zeros(r, 1);
  for (std::size_t i = 0; i < r; ++i) {
    auto x = a.row_span(i);
    auto y = b.row_span(i);
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += x[j] * y[j];
    out(i, 0) = s;
  }
  return out;
}

std::vector<double> row_norms(const Tensor& a) {
  std::vector<double> out(a.rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = 0.0;
    for (double v : a.row_span(i)) s += v * v;
    out[i] = std::sqrt(s);
  }
  return out;
}

void axpy(Tensor& a, double s, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ValidationError("axpy: shapes differ, " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += s * y[i];
}

double squared_norm(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return s;
}

}  // namespace kernels
}  // namespace vggflow

// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/rewards/reward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "vggflow/numcore/errors.hpp"

namespace vggflow::rewards {
namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};

void check_rows(const Tensor& x, std::size_t dim, const char* op) {
  if (x.rank() != 2 || (dim != 0 && x.cols() != dim)) {
    throw ValidationError(std::string(op) + ": expected " + std::to_string(dim) + " columns, got shape " +
                          shape_string(x.shape()));
  }
}

// Cholesky of H + jitter·I; fails only when H has a clearly negative direction.
bool positive_semidefinite(const Tensor& H) {
  const std::size_t n = H.rows();
  double scale = 0.0;
  for (double v : H.data()) scale = std::max(scale, std::abs(v));
  const double jitter = 1e-10 * (1.0 + scale);
  std::vector<double> L(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = H(j, j) + jitter;
    for (std::size_t k = 0; k < j; ++k) diag -= L[j * n + k] * L[j * n + k];
    if (diag <= 0.0) return false;
    L[j * n + j] = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = H(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
      L[i * n + j] = s / L[j * n + j];
    }
  }
  return true;
}

double quadratic_value(const Quadratic& q, std::span<const double> x) {
  const std::size_t d = x.size();
  double value = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double hx = 0.0;
    for (std::size_t j = 0; j < d; ++j) hx += q.H(i, j) * x[j];
    value += -0.5 * x[i] * hx + q.h(0, i) * x[i];
  }
  return value;
}

void quadratic_grad(const Quadratic& q, std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    double hx = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) hx += q.H(i, j) * x[j];
    out[i] = q.h(0, i) - hx;
  }
}

// Responsibilities and log-density share the component log-terms.
double mixture_terms(const GaussMixLogDensity& g, std::span<const double> x, std::vector<double>& resp) {
  const std::size_t k = g.means.rows(), d = x.size();
  resp.assign(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = x[j] - g.means(c, j);
      sq += diff * diff;
    }
    resp[c] = std::log(g.weights[c]) - sq / (2.0 * g.variance);
  }
  const double top = *std::max_element(resp.begin(), resp.end());
  double total = 0.0;
  for (double& r : resp) {
    r = std::exp(r - top);
    total += r;
  }
  for (double& r : resp) r /= total;
  const double log_norm = -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * g.variance);
  return top + std::log(total) + log_norm;
}

double norm(std::span<const double> x) {
  return std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
}

double point_value(const RewardSpec& spec, std::span<const double> x) {
  return std::visit(Overloaded{
                        [&](const Quadratic& q) { return quadratic_value(q, x); },
                        [&](const GaussMixLogDensity& g) {
                          std::vector<double> resp;
                          return mixture_terms(g, x, resp);
                        },
                        [&](const Ring& r) {
                          const double gap = norm(x) - r.radius;
                          return r.offset - gap * gap / (2.0 * r.width * r.width);
                        },
                        [&](const ReluWrapped& w) { return std::max(0.0, point_value(*w.inner, x)); },
                    },
                    spec);
}

void point_grad(const RewardSpec& spec, std::span<const double> x, std::span<double> out) {
  std::visit(Overloaded{
                 [&](const Quadratic& q) { quadratic_grad(q, x, out); },
                 [&](const GaussMixLogDensity& g) {
                   std::vector<double> resp;
                   mixture_terms(g, x, resp);
                   std::fill(out.begin(), out.end(), 0.0);
                   for (std::size_t c = 0; c < resp.size(); ++c)
                     for (std::size_t j = 0; j < x.size(); ++j) out[j] += resp[c] * (g.means(c, j) - x[j]) / g.variance;
                 },
                 [&](const Ring& r) {
                   const double n = norm(x);
                   // Radial derivative; the origin is treated as stationary.
                   const double radial = n > 0.0 ? -(n - r.radius) / (r.width * r.width * n) : 0.0;
                   for (std::size_t j = 0; j < x.size(); ++j) out[j] = radial * x[j];
                 },
                 [&](const ReluWrapped& w) {
                   if (point_value(*w.inner, x) > 0.0) {
                     point_grad(*w.inner, x, out);
                   } else {
                     std::fill(out.begin(), out.end(), 0.0);
                   }
                 },
             },
             spec);
}

}  // namespace

std::size_t native_dim(const RewardSpec& spec) {
  return std::visit(Overloaded{
                        [](const Quadratic& q) -> std::size_t { return q.h.size(); },
                        [](const GaussMixLogDensity& g) -> std::size_t { return g.means.cols(); },
                        [](const Ring&) -> std::size_t { return 0; },
                        [](const ReluWrapped& w) -> std::size_t { return native_dim(*w.inner); },
                    },
                    spec);
}

void validate(const RewardSpec& spec, std::size_t dim) {
  std::visit(Overloaded{
                 [&](const Quadratic& q) {
                   if (q.H.rank() != 2 || q.H.rows() != q.H.cols()) throw ValidationError("quadratic reward: H must be square");
                   if (q.h.shape() != Shape{1, q.H.rows()}) throw ValidationError("quadratic reward: h must be [1, d]");
                   for (std::size_t i = 0; i < q.H.rows(); ++i)
                     for (std::size_t j = 0; j < i; ++j)
                       if (std::abs(q.H(i, j) - q.H(j, i)) > 1e-12 * (1.0 + std::abs(q.H(i, j))))
                         throw ValidationError("quadratic reward: H must be symmetric");
                   if (!positive_semidefinite(q.H)) throw ValidationError("quadratic reward: H must be positive semidefinite");
                 },
                 [&](const GaussMixLogDensity& g) {
                   if (g.means.rank() != 2 || g.means.rows() == 0) throw ValidationError("mixture reward: need at least one mean");
                   if (g.weights.size() != g.means.rows()) throw ValidationError("mixture reward: one weight per mean");
                   double total = 0.0;
                   for (double w : g.weights) {
                     if (!(w > 0.0)) throw ValidationError("mixture reward: weights must be positive");
                     total += w;
                   }
                   if (std::abs(total - 1.0) > 1e-9) throw ValidationError("mixture reward: weights must sum to 1");
                   if (!(g.variance > 0.0)) throw ValidationError("mixture reward: variance must be positive");
                 },
                 [&](const Ring& r) {
                   if (!(r.radius > 0.0) || !(r.width > 0.0)) throw ValidationError("ring reward: radius and width must be positive");
                 },
                 [&](const ReluWrapped& w) {
                   if (!w.inner) throw ValidationError("relu reward: missing inner reward");
                   validate(*w.inner, dim);
                 },
             },
             spec);
  const std::size_t native = native_dim(spec);
  if (native != 0 && dim != 0 && native != dim) {
    throw ValidationError("reward is " + std::to_string(native) + "-dimensional, data is " + std::to_string(dim) + "-dimensional");
  }
}

ReluWrapped relu_wrap(RewardSpec inner) { return ReluWrapped{std::make_shared<const RewardSpec>(std::move(inner))}; }

bool is_relu_wrapped(const RewardSpec& spec) { return std::holds_alternative<ReluWrapped>(spec); }

std::string family_name(const RewardSpec& spec) {
  return std::visit(Overloaded{
                        [](const Quadratic&) -> std::string { return "quadratic"; },
                        [](const GaussMixLogDensity&) -> std::string { return "gauss_mix_log_density"; },
                        [](const Ring&) -> std::string { return "ring"; },
                        [](const ReluWrapped& w) -> std::string { return "relu(" + family_name(*w.inner) + ")"; },
                    },
                    spec);
}

Tensor reward_eval(const RewardSpec& spec, const Tensor& x) {
  check_rows(x, native_dim(spec), "reward_eval");
  Tensor out = Tensor::zeros(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i) out(i, 0) = point_value(spec, x.row_span(i));
  return out;
}

Tensor reward_grad(const RewardSpec& spec, const Tensor& x) {
  check_rows(x, native_dim(spec), "reward_grad");
  Tensor out = Tensor::zeros(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) point_grad(spec, x.row_span(i), out.row_span(i));
  return out;
}

double reward_eval_point(const RewardSpec& spec, std::span<const double> x) {
  const std::size_t native = native_dim(spec);
  if (native != 0 && x.size() != native) {
    throw ValidationError("reward_eval: point has " + std::to_string(x.size()) + " coordinates, expected " +
                          std::to_string(native));
  }
  return point_value(spec, x);
}

double mean_reward(const RewardSpec& spec, const Tensor& x) {
  const Tensor r = reward_eval(spec, x);
  return kernels::sum(r) / static_cast<double>(r.size());
}

}  // namespace vggflow::rewards

// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/flow/toy.hpp"

#include <cmath>
#include <numbers>

#include "vggflow/numcore/errors.hpp"

namespace vggflow::flow {
namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};

std::size_t pick(std::span<const double> weights, double u) {
  double acc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    acc += weights[k];
    if (u < acc) return k;
  }
  return weights.size() - 1;
}

}  // namespace

void validate(const ToyDistribution& dist) {
  std::visit(Overloaded{
                 [](const GaussianMixture& g) {
                   if (g.means.rank() != 2 || g.means.rows() == 0 || g.means.cols() == 0)
                     throw ValidationError("gaussian mixture: need at least one mean");
                   if (g.weights.size() != g.means.rows()) throw ValidationError("gaussian mixture: one weight per mean");
                   double total = 0.0;
                   for (double w : g.weights) {
                     if (!(w > 0.0)) throw ValidationError("gaussian mixture: weights must be positive");
                     total += w;
                   }
                   if (std::abs(total - 1.0) > 1e-9) throw ValidationError("gaussian mixture: weights must sum to 1");
                   if (!(g.variance > 0.0)) throw ValidationError("gaussian mixture: variance must be positive");
                 },
                 [](const Checkerboard& c) {
                   if (!(c.cell_size > 0.0) || !(c.extent > 0.0)) throw ValidationError("checkerboard: sizes must be positive");
                   if (c.extent < c.cell_size) throw ValidationError("checkerboard: extent must cover a cell");
                 },
                 [](const Gaussian& g) {
                   if (g.mean.empty() || g.mean.size() != g.variance.size())
                     throw ValidationError("gaussian: mean and variance must have the same nonzero length");
                   for (double v : g.variance)
                     if (!(v > 0.0)) throw ValidationError("gaussian: variances must be positive");
                 },
             },
             dist);
}

std::size_t dim(const ToyDistribution& dist) {
  return std::visit(Overloaded{
                        [](const GaussianMixture& g) { return g.means.cols(); },
                        [](const Checkerboard&) -> std::size_t { return 2; },
                        [](const Gaussian& g) { return g.mean.size(); },
                    },
                    dist);
}

std::string family_name(const ToyDistribution& dist) {
  return std::visit(Overloaded{
                        [](const GaussianMixture&) -> std::string { return "gaussian_mixture"; },
                        [](const Checkerboard&) -> std::string { return "checkerboard"; },
                        [](const Gaussian&) -> std::string { return "gaussian"; },
                    },
                    dist);
}

Tensor sample(const ToyDistribution& dist, std::size_t n, Rng& rng) {
  validate(dist);
  const std::size_t d = dim(dist);
  Tensor out = Tensor::zeros(n, d);
  std::visit(Overloaded{
                 [&](const GaussianMixture& g) {
                   const double sd = std::sqrt(g.variance);
                   for (std::size_t i = 0; i < n; ++i) {
                     const std::size_t k = pick(g.weights, rng.uniform());
                     for (std::size_t j = 0; j < d; ++j) out(i, j) = g.means(k, j) + sd * rng.normal();
                   }
                 },
                 [&](const Checkerboard& c) {
                   for (std::size_t i = 0; i < n; ++i) {
                     // Rejection onto cells whose index sum is even.
                     for (;;) {
                       const double x = rng.uniform(-c.extent, c.extent);
                       const double y = rng.uniform(-c.extent, c.extent);
                       const auto cx = static_cast<long long>(std::floor(x / c.cell_size));
                       const auto cy = static_cast<long long>(std::floor(y / c.cell_size));
                       if ((cx + cy) % 2 == 0) {
                         out(i, 0) = x;
                         out(i, 1) = y;
                         break;
                       }
                     }
                   }
                 },
                 [&](const Gaussian& g) {
                   for (std::size_t i = 0; i < n; ++i)
                     for (std::size_t j = 0; j < d; ++j) out(i, j) = g.mean[j] + std::sqrt(g.variance[j]) * rng.normal();
                 },
             },
             dist);
  return out;
}

GaussianMixture default_mixture() {
  constexpr std::size_t modes = 8;
  constexpr double radius = 2.0;
  GaussianMixture g{Tensor::zeros(modes, 2), 0.05, std::vector<double>(modes, 1.0 / modes)};
  for (std::size_t k = 0; k < modes; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / modes;
    g.means(k, 0) = radius * std::cos(angle);
    g.means(k, 1) = radius * std::sin(angle);
  }
  return g;
}

}  // namespace vggflow::flow

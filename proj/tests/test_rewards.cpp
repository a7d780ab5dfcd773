// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "vggflow/numcore/errors.hpp"
#include "vggflow/numcore/rng.hpp"
#include "vggflow/rewards/reward.hpp"

using namespace vggflow;
using namespace vggflow::rewards;

namespace {

Quadratic random_quadratic(Rng& rng, std::size_t d) {
  const Tensor M = rng.normal_matrix(d, d);
  return {kernels::matmul(M, kernels::transpose(M)), rng.normal_matrix(1, d)};
}

GaussMixLogDensity two_mode_mixture(Rng& rng) { return {rng.normal_matrix(2, 2, 1.5), {0.3, 0.7}, 0.6}; }

Tensor fd_grad(const RewardSpec& spec, const Tensor& x, double step = 1e-6) {
  Tensor out = Tensor::zeros(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      Tensor up = x, down = x;
      up(i, j) += step;
      down(i, j) -= step;
      out(i, j) = (reward_eval(spec, up)(i, 0) - reward_eval(spec, down)(i, 0)) / (2 * step);
    }
  }
  return out;
}

double relative_gap(const Tensor& a, const Tensor& b) {
  double diff = 0.0, scale = 1e-12;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a.data()[i] - b.data()[i]));
    scale = std::max(scale, std::abs(b.data()[i]));
  }
  return diff / scale;
}

}  // namespace

TEST_CASE("reward_eval examples") {
  const RewardSpec quad = Quadratic{Tensor::identity(2), Tensor::zeros(1, 2)};
  CHECK(reward_eval(quad, Tensor::zeros(1, 2)).item() == 0.0);

  const RewardSpec ring = Ring{.radius = 1.5, .width = 0.3};
  CHECK(reward_eval(ring, Tensor::matrix(1, 2, {0.9, 1.2})).item() == doctest::Approx(0.0).scale(1e-15));

  const RewardSpec lower = relu_wrap(Quadratic{Tensor::zeros(1, 1), Tensor::matrix(1, 1, {-1.0})});
  CHECK(reward_eval(lower, Tensor::matrix(1, 1, {1.0})).item() == 0.0);
  const RewardSpec upper = relu_wrap(Quadratic{Tensor::zeros(1, 1), Tensor::matrix(1, 1, {2.0})});
  CHECK(reward_eval(upper, Tensor::matrix(1, 1, {1.0})).item() == 2.0);
}

TEST_CASE("reward_grad examples") {
  const Tensor h = Tensor::matrix(1, 2, {0.5, -1.0});
  const RewardSpec quad = Quadratic{Tensor::matrix(2, 2, {2, 1, 1, 3}), h};
  CHECK(reward_grad(quad, Tensor::zeros(1, 2)) == h);
  const Tensor x = Tensor::matrix(1, 2, {1.0, 2.0});
  const Tensor g = reward_grad(quad, x);
  CHECK(g(0, 0) == doctest::Approx(0.5 - 4.0));
  CHECK(g(0, 1) == doctest::Approx(-1.0 - 7.0));

  const RewardSpec ring = Ring{.radius = 2.0, .width = 0.5};
  const Tensor on_ring = reward_grad(ring, Tensor::matrix(1, 2, {1.2, 1.6}));
  CHECK(std::abs(on_ring(0, 0)) < 1e-15);
  CHECK(std::abs(on_ring(0, 1)) < 1e-15);

  Rng rng(31);
  const RewardSpec mix = two_mode_mixture(rng);
  const Tensor probe = rng.normal_matrix(1, 2);
  CHECK(relative_gap(reward_grad(mix, probe), fd_grad(mix, probe)) < 1e-6);
}

TEST_CASE("relu kink and clipped region have zero gradient") {
  const RewardSpec wrapped = relu_wrap(Quadratic{Tensor::zeros(1, 1), Tensor::matrix(1, 1, {1.0})});
  CHECK(reward_grad(wrapped, Tensor::matrix(1, 1, {0.0})).item() == 0.0);
  CHECK(reward_grad(wrapped, Tensor::matrix(1, 1, {-3.0})).item() == 0.0);
  CHECK(reward_grad(wrapped, Tensor::matrix(1, 1, {3.0})).item() == 1.0);
}

TEST_CASE("property: analytic gradients match central differences for every family") {
  Rng rng(8);
  const std::vector<RewardSpec> specs{
      random_quadratic(rng, 2),
      two_mode_mixture(rng),
      Ring{.radius = 1.7, .width = 0.4, .offset = 0.5},
      relu_wrap(Ring{.radius = 1.7, .width = 0.9, .offset = 1.0}),
  };
  for (const auto& spec : specs) {
    INFO(family_name(spec));
    for (int k = 0; k < 100; ++k) {
      Tensor x = rng.normal_matrix(1, 2, 1.5);
      // Stay clear of the relu kink where differences straddle it.
      if (is_relu_wrapped(spec) && std::abs(reward_eval(*std::get<ReluWrapped>(spec).inner, x).item()) < 1e-4) continue;
      CHECK(relative_gap(reward_grad(spec, x), fd_grad(spec, x)) < 1e-5);
    }
  }
}

TEST_CASE("property: quadratic reward is concave") {
  Rng rng(12);
  for (int k = 0; k < 100; ++k) {
    const RewardSpec q = random_quadratic(rng, 3);
    const Tensor a = rng.normal_matrix(1, 3), b = rng.normal_matrix(1, 3);
    const Tensor mid = kernels::scale(kernels::add(a, b), 0.5);
    CHECK(reward_eval(q, mid).item() >= 0.5 * (reward_eval(q, a).item() + reward_eval(q, b).item()) - 1e-12);
  }
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(validate(Quadratic{Tensor::matrix(2, 2, {1, 2, 0, 1}), Tensor::zeros(1, 2)}, 2), ValidationError);
  CHECK_THROWS_AS(validate(Quadratic{Tensor::matrix(2, 2, {-1, 0, 0, 1}), Tensor::zeros(1, 2)}, 2), ValidationError);
  CHECK_THROWS_AS(validate(Quadratic{Tensor::identity(2), Tensor::zeros(1, 2)}, 3), ValidationError);
  CHECK_THROWS_AS(validate(Ring{.radius = 0.0, .width = 1.0}, 2), ValidationError);
  CHECK_THROWS_AS(validate(GaussMixLogDensity{Tensor::zeros(2, 2), {0.5, 0.6}, 1.0}, 2), ValidationError);
  CHECK_NOTHROW(validate(relu_wrap(Ring{}), 2));
  const RewardSpec quad = Quadratic{Tensor::identity(2), Tensor::zeros(1, 2)};
  CHECK_THROWS_AS(reward_eval(quad, Tensor::zeros(1, 3)), ValidationError);
  CHECK_THROWS_AS(reward_grad(quad, Tensor::zeros(1, 3)), ValidationError);
}

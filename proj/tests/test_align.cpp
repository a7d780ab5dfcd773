// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include "doctest.h"
#include "test_support.hpp"
#include "vggflow/align/trainer.hpp"
#include "vggflow/numcore/errors.hpp"

using namespace vggflow;
using namespace vggflow::align;
using vggflow::testing::max_abs_diff;
using vggflow::testing::relative_error;

namespace {

nets::MlpSpec small_spec(nets::FinalInit init = nets::FinalInit::Standard) {
  nets::MlpSpec s;
  s.hidden = {16, 16};
  s.time_embed_dim = 4;
  s.final_init = init;
  return s;
}

flow::FieldPtr random_base(std::uint64_t seed) {
  Rng rng(seed);
  return std::make_shared<flow::MlpField>(nets::Mlp::initialize(small_spec(), rng));
}

flow::FieldPtr zero_base(std::size_t dim) {
  return std::make_shared<flow::ConstantField>(Tensor::zeros(1, dim));
}

rewards::RewardSpec quadratic_2d() {
  return rewards::Quadratic{Tensor::matrix(2, 2, {2.0, 0.3, 0.3, 1.0}), Tensor::matrix(1, 2, {0.5, -1.0})};
}

rewards::RewardSpec linear_reward(std::vector<double> c) {
  const std::size_t d = c.size();
  return rewards::Quadratic{Tensor::zeros(d, d), Tensor::row(c)};
}

/// g given directly as a function of (x, t), recorded as a constant.
class FunctionGradient final : public GradientModel {
 public:
  using Fn = std::function<void(std::span<const double>, double, std::span<double>)>;
  FunctionGradient(std::size_t dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}
  std::size_t dim() const override { return dim_; }
  Tensor eval(const Tensor& x, std::span<const double> t) const override {
    Tensor out = Tensor::zeros(x.rows(), dim_);
    for (std::size_t i = 0; i < x.rows(); ++i) fn_(x.row_span(i), t[i], out.row_span(i));
    return out;
  }

 private:
  std::size_t dim_;
  Fn fn_;
};

TransitionBatch random_batch(std::size_t n, std::size_t d, Rng& rng) {
  TransitionBatch b{rng.normal_matrix(n, d), {}, {}, Tensor::zeros(n, d), rng.normal_matrix(n, d)};
  for (std::size_t i = 0; i < n; ++i) {
    b.times.push_back(rng.uniform(0.0, 0.99));
    b.steps.push_back(i);
  }
  return b;
}

bool all_zero(const GradMap& grads) {
  for (const auto& [name, g] : grads)
    for (double v : g.data())
      if (v != 0.0) return false;
  return true;
}

}  // namespace

TEST_CASE("one_step_prediction: examples") {
  const flow::ConstantField c(Tensor::matrix(1, 2, {0.5, -2.0}));
  const Tensor x = Tensor::matrix(1, 2, {1.0, 1.0});
  const std::vector<double> t1{1.0}, t0{0.0};
  CHECK(one_step_prediction(c, x, t1) == x);
  const Tensor moved = one_step_prediction(c, x, t0);
  CHECK(moved(0, 0) == 1.5);
  CHECK(moved(0, 1) == -1.0);

  const flow::LinearField identity(Tensor::identity(1));
  const std::vector<double> half{0.5};
  CHECK(one_step_prediction(identity, Tensor::matrix(1, 1, {2.0}), half).item() == doctest::Approx(3.0));
}

TEST_CASE("eta schedules") {
  CHECK(eta(EtaSchedule::Quadratic, 1.0) == 1.0);
  CHECK(eta(EtaSchedule::Linear, 1.0) == 1.0);
  CHECK(eta(EtaSchedule::Quadratic, 0.0) == 0.0);
  CHECK(parse_eta("linear") == EtaSchedule::Linear);
  CHECK_THROWS_AS(parse_eta("cubic"), ValidationError);
  for (double t = 0.0; t <= 1.0; t += 0.125) {
    CHECK(eta(EtaSchedule::Quadratic, t) >= 0.0);
    CHECK(eta(EtaSchedule::Quadratic, t) <= 1.0);
  }
}

TEST_CASE("value_gradient: boundary identity, zero at t=0, schedule ratio") {
  Rng rng(3);
  const auto base = random_base(1);
  const auto reward = quadratic_2d();
  const auto& q = std::get<rewards::Quadratic>(reward);
  const Tensor x = rng.normal_matrix(6, 2);

  const ValueGradientField quad = ValueGradientField::initialize(reward, 2, small_spec(), EtaSchedule::Quadratic, rng);
  const ValueGradientField lin = ValueGradientField::initialize(reward, 2, small_spec(), EtaSchedule::Linear, rng);

  const std::vector<double> ones(6, 1.0), zeros(6, 0.0), halves(6, 0.5);
  const Tensor expected = kernels::sub(kernels::matmul(x, kernels::transpose(q.H)), q.h);
  CHECK(max_abs_diff(quad.eval(*base, x, ones), expected) < 1e-13);
  CHECK(max_abs_diff(quad.eval(*base, x, ones), kernels::scale(rewards::reward_grad(reward, x), -1.0)) == 0.0);
  CHECK(max_abs_diff(quad.eval(*base, x, zeros), Tensor::zeros(6, 2)) == 0.0);

  const Tensor lq = quad.leading(*base, x, halves), ll = lin.leading(*base, x, halves);
  for (std::size_t i = 0; i < lq.size(); ++i) CHECK(ll.data()[i] == doctest::Approx(2.0 * lq.data()[i]).epsilon(1e-14));
}

TEST_CASE("value_gradient: leading term is clipped per row") {
  Rng rng(5);
  const auto base = zero_base(2);
  const ValueGradientField g =
      ValueGradientField::initialize(linear_reward({3.0, 4.0}), 2, small_spec(), EtaSchedule::Linear, rng);
  const std::vector<double> ones(1, 1.0);
  const Tensor lead = g.leading(*base, Tensor::zeros(1, 2), ones, 1.0);
  CHECK(lead(0, 0) == doctest::Approx(-0.6));
  CHECK(lead(0, 1) == doctest::Approx(-0.8));
}

TEST_CASE("consistency_residual: constant g and constant base give zero") {
  const flow::ConstantField base(Tensor::matrix(1, 2, {0.4, -0.7}));
  const FunctionGradient g(2, [](auto, double, std::span<double> out) {
    out[0] = 1.5;
    out[1] = -0.25;
  });
  Rng rng(1);
  const Tensor x = rng.normal_matrix(5, 2);
  const std::vector<double> t{0.0, 0.2, 0.5, 0.8, 0.99};
  for (ConsistencyMode mode : {ConsistencyMode::Partial, ConsistencyMode::PaperC1}) {
    ResidualOptions opts;
    opts.mode = mode;
    opts.current = &base;
    const Tensor r = consistency_residual(g, base, x, t, opts);
    CHECK(max_abs_diff(r, Tensor::zeros(5, 2)) < 1e-12);
  }
}

TEST_CASE("consistency_residual: 1D g = x, zero base, beta = 1 gives -x") {
  const flow::ConstantField base(Tensor::zeros(1, 1));
  const FunctionGradient g(1, [](std::span<const double> x, double, std::span<double> out) { out[0] = x[0]; });
  const Tensor x = Tensor::matrix(4, 1, {-2.0, -0.5, 0.3, 1.7});
  const std::vector<double> t{0.1, 0.4, 0.6, 0.9};
  const Tensor r = consistency_residual(g, base, x, t, {});
  for (std::size_t i = 0; i < 4; ++i) CHECK(r(i, 0) == doctest::Approx(-x(i, 0)).epsilon(1e-9));
}

TEST_CASE("consistency_residual: exact for a linear-quadratic pair with non-symmetric drift") {
  // v_base = Ax, g = Sx with S symmetric: R = S(Ax - βSx) + AᵀSx.
  const Tensor A = Tensor::matrix(2, 2, {0.1, 0.6, -0.3, 0.2});
  const Tensor S = Tensor::matrix(2, 2, {1.0, 0.4, 0.4, 2.0});
  const flow::LinearField base(A);
  const FunctionGradient g(2, [&](std::span<const double> x, double, std::span<double> out) {
    out[0] = S(0, 0) * x[0] + S(0, 1) * x[1];
    out[1] = S(1, 0) * x[0] + S(1, 1) * x[1];
  });
  const double beta = 0.7;
  Rng rng(2);
  const Tensor x = rng.normal_matrix(8, 2);
  const std::vector<double> t(8, 0.3);
  ResidualOptions opts;
  opts.beta = beta;
  const Tensor r = consistency_residual(g, base, x, t, opts);
  const Tensor Sx = kernels::matmul(x, S);
  const Tensor w = kernels::sub(kernels::matmul(x, kernels::transpose(A)), kernels::scale(Sx, beta));
  const Tensor expected = kernels::add(kernels::matmul(w, S), kernels::matmul(Sx, A));
  CHECK(max_abs_diff(r, expected) < 1e-8);
}

TEST_CASE("consistency_residual: rejects t + eps > 1 and mismatched shapes") {
  const flow::ConstantField base(Tensor::zeros(1, 1));
  const FunctionGradient g(1, [](auto, double, std::span<double> out) { out[0] = 0.0; });
  const std::vector<double> late{0.9995};
  CHECK_THROWS_AS(consistency_residual(g, base, Tensor::zeros(1, 1), late, {}), ValidationError);
  const std::vector<double> two{0.1, 0.2};
  CHECK_THROWS_AS(consistency_residual(g, base, Tensor::zeros(1, 1), two, {}), ValidationError);
  CHECK(shrink_eps(late, 1e-3)[0] == doctest::Approx(5e-4));
}

TEST_CASE("consistency_loss: zero, unit and duplication examples") {
  Rng rng(7);
  const auto base = zero_base(2);
  const flow::FinetunedField policy = initial_policy(base, small_spec(), rng);

  TransitionBatch one{Tensor::matrix(1, 2, {0.3, -0.2}), {0.4}, {0}, Tensor::zeros(1, 2), Tensor::zeros(1, 2)};
  const auto zero_g = ValueGradientField::initialize(linear_reward({0.0, 0.0}), 2, small_spec(nets::FinalInit::Tiny),
                                                     EtaSchedule::Linear, rng);
  CHECK(consistency_loss({policy, zero_g, kNoClip}, one, {}).value == 0.0);

  // g = -t·c with c = (1, 0): T1 = -c, T2 = T3 = 0, so R = (-1, 0).
  const auto unit_g = ValueGradientField::initialize(linear_reward({1.0, 0.0}), 2, small_spec(nets::FinalInit::Tiny),
                                                     EtaSchedule::Linear, rng);
  CHECK(consistency_loss({policy, unit_g, kNoClip}, one, {}).value == doctest::Approx(1.0).epsilon(1e-10));

  const auto base_mlp = random_base(11);
  const flow::FinetunedField p2 = initial_policy(base_mlp, small_spec(), rng);
  const ValueGradientField g2(quadratic_2d(), nets::Mlp::initialize(small_spec(), rng), EtaSchedule::Quadratic);
  const TransitionBatch b = random_batch(5, 2, rng);
  TransitionBatch doubled = b;
  doubled.states = Tensor::zeros(10, 2);
  doubled.times.clear();
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < 5; ++i) {
      doubled.states(k * 5 + i, 0) = b.states(i, 0);
      doubled.states(k * 5 + i, 1) = b.states(i, 1);
      doubled.times.push_back(b.times[i]);
    }
  }
  const double single = consistency_loss({p2, g2, kNoClip}, b, {}).value;
  CHECK(single > 0.0);
  CHECK(consistency_loss({p2, g2, kNoClip}, doubled, {}).value == doctest::Approx(single).epsilon(1e-12));
}

TEST_CASE("boundary_loss: zero at init, ||delta||^2 under a constant offset") {
  Rng rng(9);
  const auto base = random_base(4);
  const flow::FinetunedField policy = initial_policy(base, small_spec(), rng);
  ValueGradientField g = ValueGradientField::initialize(quadratic_2d(), 2, small_spec(), EtaSchedule::Quadratic, rng);
  const Tensor x1 = rng.normal_matrix(16, 2, 2.0);
  CHECK(boundary_loss({policy, g, 0.1}, x1).value == 0.0);

  const std::size_t last = small_spec().hidden.size();
  g.correction().params().at(nets::layer_bias_name(last)) = Tensor::matrix(1, 2, {0.3, -0.4});
  CHECK(boundary_loss({policy, g, kNoClip}, x1).value == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("matching_loss: examples") {
  Rng rng(12);
  const auto base = random_base(6);
  flow::FinetunedField policy = initial_policy(base, small_spec(), rng);
  const ValueGradientField g(quadratic_2d(), nets::Mlp::initialize(small_spec(), rng), EtaSchedule::Quadratic);
  const TransitionBatch batch = random_batch(7, 2, rng);
  const LossContext ctx{policy, g, kNoClip};

  const Tensor gv = g.eval(policy, batch.states, batch.times);
  double mean_sq = 0.0;
  for (double v : gv.data()) mean_sq += v * v;
  mean_sq /= 7.0;
  CHECK(matching_loss(ctx, batch, 1.5).value == doctest::Approx(2.25 * mean_sq).epsilon(1e-12));
  CHECK(matching_loss(ctx, batch, 0.0).value == 0.0);

  // Residual equal to -βg everywhere: zero loss through the explicit-target form.
  CHECK(residual_matching_loss(policy, batch.states, batch.times, Tensor::zeros(7, 2), 1.0).value == 0.0);

  // β = 0 is pure shrinkage toward the base.
  policy.residual() = nets::Mlp::initialize(flow::residual_spec(2, small_spec(nets::FinalInit::Standard)), rng);
  const Tensor res = policy.eval_residual(batch.states, batch.times);
  double res_sq = 0.0;
  for (double v : res.data()) res_sq += v * v;
  CHECK(matching_loss(ctx, batch, 0.0).value == doctest::Approx(res_sq / 7.0).epsilon(1e-12));
  CHECK(residual_matching_loss(policy, batch.states, batch.times, kernels::scale(res, -1.0), 1.0).value ==
        0.0);
}

TEST_CASE("losses: gradients match finite differences") {
  Rng rng(21);
  const auto base = random_base(8);
  flow::FinetunedField policy = initial_policy(base, small_spec(), rng);
  policy.residual() = nets::Mlp::initialize(small_spec(), rng);
  ValueGradientField g(quadratic_2d(), nets::Mlp::initialize(small_spec(), rng), EtaSchedule::Quadratic);
  const TransitionBatch batch = random_batch(6, 2, rng);
  const double tau = 1.0;

  SUBCASE("value losses in phi") {
    // Displacement directions are constants of the loss. A constant base and
    // β = 0 make them independent of φ, so finite differences apply.
    const flow::FinetunedField drift = initial_policy(
        std::make_shared<flow::ConstantField>(Tensor::matrix(1, 2, {0.8, -0.5})), small_spec(), rng);
    ResidualOptions opts;
    opts.beta = 0.0;
    const ValueLosses analytic = value_losses({drift, g, tau}, batch, opts, 3.0);
    GradMap fd;
    for (auto& [name, value] : g.correction().params()) {
      Tensor grad(value.shape(), std::vector<double>(value.size(), 0.0));
      for (std::size_t i = 0; i < value.size(); ++i) {
        const double saved = value.data()[i];
        auto total = [&] {
          const ValueLosses v = value_losses({drift, g, tau}, batch, opts, 3.0);
          return v.consistency + 3.0 * v.boundary;
        };
        value.data()[i] = saved + 1e-6;
        const double up = total();
        value.data()[i] = saved - 1e-6;
        const double down = total();
        value.data()[i] = saved;
        grad.data()[i] = (up - down) / 2e-6;
      }
      fd.emplace(name, std::move(grad));
    }
    CHECK(relative_error(analytic.phi, fd) < 1e-5);
  }

  SUBCASE("matching loss in theta") {
    // g depends on the policy only through the constant predictor; a reward
    // with a flat gradient removes that path so finite differences see θ alone.
    const ValueGradientField flat(linear_reward({0.7, -0.2}), g.correction(), EtaSchedule::Quadratic);
    const LossResult a2 = matching_loss({policy, flat, tau}, batch, 0.8);
    GradMap fd2;
    for (auto& [name, value] : policy.residual().params()) {
      Tensor grad(value.shape(), std::vector<double>(value.size(), 0.0));
      for (std::size_t i = 0; i < value.size(); ++i) {
        const double saved = value.data()[i];
        value.data()[i] = saved + 1e-6;
        const double up = matching_loss({policy, flat, tau}, batch, 0.8).value;
        value.data()[i] = saved - 1e-6;
        const double down = matching_loss({policy, flat, tau}, batch, 0.8).value;
        value.data()[i] = saved;
        grad.data()[i] = (up - down) / 2e-6;
      }
      fd2.emplace(name, std::move(grad));
    }
    CHECK(relative_error(a2.theta, fd2) < 1e-5);
    CHECK(!all_zero(a2.theta));
  }
}

TEST_CASE("losses: gradients reach only their own network") {
  Rng rng(31);
  const auto base = random_base(9);
  flow::FinetunedField policy = initial_policy(base, small_spec(), rng);
  policy.residual() = nets::Mlp::initialize(small_spec(), rng);
  const ValueGradientField g(quadratic_2d(), nets::Mlp::initialize(small_spec(), rng), EtaSchedule::Quadratic);
  const TransitionBatch batch = random_batch(5, 2, rng);
  for (ConsistencyMode mode : {ConsistencyMode::Partial, ConsistencyMode::PaperC1}) {
    ResidualOptions opts;
    opts.mode = mode;
    const ValueLosses v = value_losses({policy, g, 0.5}, batch, opts, 1e4);
    CHECK(v.theta.size() == policy.residual().params().size());
    CHECK(all_zero(v.theta));
    CHECK(!all_zero(v.phi));
  }
  const LossResult m = matching_loss({policy, g, 0.5}, batch, 1.0);
  CHECK(m.phi.size() == g.correction().params().size());
  CHECK(all_zero(m.phi));
  CHECK(!all_zero(m.theta));
}

TEST_CASE("subsample_transitions: bins") {
  const auto bins = step_bins(20, 5);
  REQUIRE(bins.size() == 5);
  for (std::size_t b = 0; b < 5; ++b) {
    CHECK(bins[b].first == 4 * b);
    CHECK(bins[b].second == 4 * b + 4);
  }
  const auto uneven = step_bins(7, 3);
  CHECK(uneven[0] == std::pair<std::size_t, std::size_t>{0, 3});
  CHECK(uneven[1] == std::pair<std::size_t, std::size_t>{3, 5});
  CHECK(uneven[2] == std::pair<std::size_t, std::size_t>{5, 7});
  CHECK_THROWS_AS(step_bins(4, 5), ValidationError);
  CHECK_THROWS_AS(step_bins(4, 0), ValidationError);

  Rng rng(4);
  const flow::LinearField v(Tensor::identity(2));
  const flow::Trajectory traj = flow::integrate(v, rng.normal_matrix(3, 2), {});
  const TransitionBatch five = subsample_transitions(traj, 5, rng);
  REQUIRE(five.size() == 15);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t b = 0; b < 5; ++b) {
      const std::size_t step = five.steps[i * 5 + b];
      CHECK(step / 4 == b);
      CHECK(five.times[i * 5 + b] == traj.times[step]);
      CHECK(five.states(i * 5 + b, 0) == traj.states[step](i, 0));
      CHECK(five.velocities(i * 5 + b, 1) == traj.velocities[step](i, 1));
    }
  }
  CHECK(five.terminals == traj.terminal());

  const TransitionBatch all = subsample_transitions(traj, 20, rng);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t s = 0; s < 20; ++s) CHECK(all.steps[i * 20 + s] == s);
  CHECK(subsample_transitions(traj, 1, rng).size() == 3);
}

TEST_CASE("jitter_within_steps: rows stay on their Euler segment") {
  Rng rng(8);
  const flow::LinearField v(Tensor::identity(2));
  const flow::Trajectory traj = flow::integrate(v, rng.normal_matrix(16, 2), {});
  const TransitionBatch grid = subsample_transitions(traj, 5, rng);
  const double dt = 1.0 / 20.0;
  const TransitionBatch moved = jitter_within_steps(grid, dt, rng);
  REQUIRE(moved.size() == grid.size());
  bool any_moved = false;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    const double shift = moved.times[r] - grid.times[r];
    CHECK(shift >= 0.0);
    CHECK(shift < dt);
    any_moved = any_moved || shift > 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(std::abs(moved.states(r, j) - (grid.states(r, j) + shift * grid.velocities(r, j))) <= 1e-12);
    }
    CHECK(moved.steps[r] == grid.steps[r]);
  }
  CHECK(any_moved);
  CHECK(moved.terminals == grid.terminals);
  CHECK_THROWS_AS(jitter_within_steps(grid, 0.0, rng), ValidationError);
}

TEST_CASE("percentile_clip: examples") {
  const Tensor v = Tensor::matrix(5, 2, {1.0, 0.0, 0.0, 2.0, 3.0, 0.0, 0.0, -4.0, 3.0, 4.0});
  CHECK(clip_threshold(v, 80.0) == doctest::Approx(4.2));
  const Tensor c = percentile_clip(v, 80.0);
  for (std::size_t i = 0; i < 8; ++i) CHECK(c.data()[i] == v.data()[i]);
  CHECK(c(4, 0) == doctest::Approx(3.0 * 4.2 / 5.0));
  CHECK(c(4, 1) == doctest::Approx(4.0 * 4.2 / 5.0));

  const Tensor equal = Tensor::matrix(3, 2, {1.0, 0.0, 0.0, 1.0, 0.6, 0.8});
  CHECK(percentile_clip(equal, 50.0) == equal);
  CHECK(percentile_clip(Tensor::zeros(4, 3), 80.0) == Tensor::zeros(4, 3));
  CHECK_THROWS_AS(percentile_clip(Tensor::zeros(0, 2), 80.0), ValidationError);
  CHECK_THROWS_AS(percentile_clip(v, 0.0), ValidationError);
  CHECK_THROWS_AS(percentile_clip(v, 101.0), ValidationError);
}

TEST_CASE("percentile_clip: clipping at a fixed threshold is idempotent") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor v = rng.normal_matrix(1 + rng.uniform_index(40), 3, rng.uniform(0.1, 5.0));
    const double p = rng.uniform(1.0, 100.0);
    const double tau = clip_threshold(v, p);
    const Tensor once = clip_rows(v, tau);
    CHECK(clip_rows(once, tau) == once);
    for (double n : kernels::row_norms(once)) CHECK(n <= tau * (1.0 + 1e-15));
  }
}

TEST_CASE("DivergenceGuard: warns once after the patience window") {
  DivergenceGuard guard(1.0, 3);
  CHECK_FALSE(guard.observe(0, 5.0));
  CHECK_FALSE(guard.observe(1, 3.5));
  CHECK_FALSE(guard.observe(2, 3.5));
  const auto w = guard.observe(3, 3.9);
  REQUIRE(w);
  CHECK(w->round == 3);
  CHECK_FALSE(guard.observe(4, 3.0));
  CHECK_FALSE(guard.observe(5, 4.5));
}

TEST_CASE("FinetuneConfig: validation") {
  FinetuneConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.beta = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.bins = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.bins = 21;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.clip_percentile = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

namespace {

FinetuneConfig quick_config(std::size_t rounds, double beta) {
  FinetuneConfig cfg;
  cfg.n_rounds = rounds;
  cfg.beta = beta;
  cfg.batch = 8;
  cfg.residual_net = small_spec();
  cfg.value_net = small_spec();
  cfg.seed = 17;
  return cfg;
}

}  // namespace

TEST_CASE("vgg_flow_train: beta = 0 keeps the policy at the base") {
  const auto base = random_base(2);
  const rewards::RewardSpec reward = rewards::Ring{1.5, 0.5, 0.0};
  const TrainResult r = vgg_flow_train(quick_config(40, 0.0), base, reward);
  REQUIRE(r.metrics.size() == 40);
  Rng probe(99);
  const Tensor x = probe.normal_matrix(64, 2);
  std::vector<double> t(64);
  for (std::size_t i = 0; i < 64; ++i) t[i] = probe.uniform();
  const auto norms = kernels::row_norms(r.policy.eval_residual(x, t));
  double mean = 0.0;
  for (double n : norms) mean += n / 64.0;
  CHECK(mean < 1e-3);
  for (const auto& m : r.metrics) CHECK(m.loss_matching < 1e-6);
}

TEST_CASE("vgg_flow_train: boundary loss starts at exactly zero and runs are reproducible") {
  const auto base = random_base(3);
  const rewards::RewardSpec reward = quadratic_2d();
  std::vector<RoundMetrics> seen;
  const TrainResult a =
      vgg_flow_train(quick_config(6, 1.0), base, reward, [&](const RoundMetrics& m, const flow::FinetunedField&) {
        seen.push_back(m);
      });
  CHECK(a.metrics.front().loss_boundary == 0.0);
  CHECK(seen.size() == 6);
  const TrainResult b = vgg_flow_train(quick_config(6, 1.0), base, reward);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(a.metrics[i].mean_reward == b.metrics[i].mean_reward);
    CHECK(a.metrics[i].loss_matching == b.metrics[i].loss_matching);
    CHECK(a.metrics[i].loss_consistency == b.metrics[i].loss_consistency);
    CHECK(a.metrics[i].grad_norm_phi == b.metrics[i].grad_norm_phi);
  }
  CHECK(a.policy.residual().params() == b.policy.residual().params());
  CHECK(a.gfield->correction().params() == b.gfield->correction().params());
}

TEST_CASE("write_metrics_csv: header and full precision") {
  const auto path = std::filesystem::temp_directory_path() / "vggflow_metrics_test.csv";
  write_metrics_csv(path, {RoundMetrics{0, 0.1, 1.0 / 3.0, 2.0, 3.0, 4.0, 5.0}});
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == metrics_csv_header());
  CHECK(row.rfind("0,0.10000000000000001,0.33333333333333331,", 0) == 0);
  std::filesystem::remove(path);
}

// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "test_support.hpp"
#include "vggflow/numcore/errors.hpp"
#include "vggflow/numcore/optim.hpp"
#include "vggflow/numcore/rng.hpp"

using namespace vggflow;
using vggflow::testing::GraphBuilder;
using vggflow::testing::fd_gradient;
using vggflow::testing::relative_error;
using vggflow::testing::tape_gradient;

TEST_CASE("backward: square at 3 gives 6") {
  Tape tape;
  Var x = tape.param("x", Tensor::scalar(3.0));
  GradMap g = backward(tape, tape.sum(tape.square(x)));
  CHECK(g.at("x").item() == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("backward: unreached parameter gets a zero tensor") {
  Tape tape;
  Var p = tape.param("p", Tensor::matrix(2, 2, {1, 2, 3, 4}));
  Var c = tape.constant(Tensor::scalar(5.0));
  (void)p;
  GradMap g = backward(tape, tape.square(c));
  CHECK(g.at("p") == Tensor::zeros(2, 2));
}

TEST_CASE("backward: sum(tanh(W x)) matches central differences") {
  Rng rng(11);
  ParamSet params{{"W", rng.normal_matrix(3, 3)}};
  const Tensor x = rng.normal_matrix(3, 1);
  GraphBuilder f = [&](Tape& t, const ParamSet& p) { return t.sum(t.tanh(t.matmul(t.param("W", p.at("W")), t.constant(x)))); };
  CHECK(relative_error(tape_gradient(f, params), fd_gradient(f, params)) < 1e-6);
}

TEST_CASE("backward: rejects non-scalar outputs") {
  Tape tape;
  Var x = tape.param("x", Tensor::zeros(2, 2));
  CHECK_THROWS_AS(backward(tape, tape.tanh(x)), ValidationError);
}

TEST_CASE("backward: non-finite value reports its node") {
  Tape tape;
  Var x = tape.param("x", Tensor::scalar(std::numeric_limits<double>::infinity()));
  Var y = tape.sum(tape.square(x));
  try {
    backward(tape, y);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.where() >= 0);
  }
}

namespace {

// One builder per op, each over random parameters a [3,4], b [3,4], m [4,2], r [1,4].
std::vector<std::pair<const char*, GraphBuilder>> op_graphs() {
  auto P = [](Tape& t, const ParamSet& p, const char* n) { return t.param(n, p.at(n)); };
  return {
      {"matmul", [=](Tape& t, const ParamSet& p) { return t.sum(t.tanh(t.matmul(P(t, p, "a"), P(t, p, "m")))); }},
      {"add", [=](Tape& t, const ParamSet& p) { return t.sum(t.square(P(t, p, "a") + P(t, p, "b"))); }},
      {"add_row_broadcast",
       [=](Tape& t, const ParamSet& p) { return t.sum(t.tanh(t.add(P(t, p, "a"), P(t, p, "r")))); }},
      {"sub", [=](Tape& t, const ParamSet& p) { return t.sum(t.silu(P(t, p, "a") - P(t, p, "b"))); }},
      {"mul", [=](Tape& t, const ParamSet& p) { return t.sum(P(t, p, "a") * t.tanh(P(t, p, "b"))); }},
      {"scale", [=](Tape& t, const ParamSet& p) { return t.sum(t.square(P(t, p, "a") * -1.7)); }},
      {"mean", [=](Tape& t, const ParamSet& p) { return t.mean(t.square(t.tanh(P(t, p, "a")))); }},
      {"tanh", [=](Tape& t, const ParamSet& p) { return t.sum(t.tanh(P(t, p, "a") * P(t, p, "b"))); }},
      {"silu", [=](Tape& t, const ParamSet& p) { return t.sum(t.silu(P(t, p, "a"))); }},
      {"relu", [=](Tape& t, const ParamSet& p) { return t.sum(t.square(t.relu(P(t, p, "a")))); }},
      {"square", [=](Tape& t, const ParamSet& p) { return t.sum(t.square(P(t, p, "b"))); }},
      {"squared_distance", [=](Tape& t, const ParamSet& p) { return t.squared_distance(t.tanh(P(t, p, "a")), P(t, p, "b")); }},
      {"concat", [=](Tape& t, const ParamSet& p) {
         return t.sum(t.tanh(t.matmul(t.concat(P(t, p, "a"), P(t, p, "b")), t.concat(t.constant(Tensor::filled(8, 1, 0.3)), t.constant(Tensor::filled(8, 1, -0.2))))));
       }},
      {"slice", [=](Tape& t, const ParamSet& p) { return t.sum(t.square(t.slice(P(t, p, "a"), 1, 3))); }},
  };
}

ParamSet random_params(Rng& rng) {
  return {{"a", rng.normal_matrix(3, 4)}, {"b", rng.normal_matrix(3, 4)}, {"m", rng.normal_matrix(4, 2)}, {"r", rng.normal_matrix(1, 4)}};
}

}  // namespace

TEST_CASE("property: every op matches central differences") {
  Rng rng(2026);
  for (const auto& [name, graph] : op_graphs()) {
    for (int trial = 0; trial < 5; ++trial) {
      ParamSet params = random_params(rng);
      // Keep relu inputs away from the kink so differences are smooth.
      for (double& v : params.at("a").data())
        if (std::abs(v) < 1e-3) v = 0.5;
      INFO(name);
      CHECK(relative_error(tape_gradient(graph, params), fd_gradient(graph, params)) < 1e-5);
    }
  }
}

TEST_CASE("property: gradients are linear in the output") {
  Rng rng(7);
  const ParamSet params = random_params(rng);
  auto graphs = op_graphs();
  for (std::size_t i = 0; i + 1 < graphs.size(); ++i) {
    const GraphBuilder f = graphs[i].second, g = graphs[i + 1].second;
    const double a = rng.normal(), b = rng.normal();
    GraphBuilder combined = [&](Tape& t, const ParamSet& p) { return t.add(t.scale(f(t, p), a), t.scale(g(t, p), b)); };
    const GradMap gc = tape_gradient(combined, params);
    const GradMap gf = tape_gradient(f, params), gg = tape_gradient(g, params);
    auto entry = [](const GradMap& m, const std::string& name, std::size_t k) {
      const auto it = m.find(name);
      return it == m.end() ? 0.0 : it->second.data()[k];
    };
    for (const auto& [name, value] : gc) {
      for (std::size_t k = 0; k < value.size(); ++k) {
        CHECK(std::abs(value.data()[k] - (a * entry(gf, name, k) + b * entry(gg, name, k))) < 1e-12);
      }
    }
  }
}

TEST_CASE("property: stop-gradient equals substituting a constant") {
  Rng rng(5);
  const ParamSet params = random_params(rng);
  GraphBuilder with_stop = [](Tape& t, const ParamSet& p) {
    Var a = t.param("a", p.at("a"));
    Var inner = t.stop_gradient(t.tanh(a));
    return t.sum(t.mul(inner, t.square(a)));
  };
  GraphBuilder with_constant = [](Tape& t, const ParamSet& p) {
    Var a = t.param("a", p.at("a"));
    Var inner = t.constant(kernels::tanh(p.at("a")));
    return t.sum(t.mul(inner, t.square(a)));
  };
  CHECK(tape_gradient(with_stop, params) == tape_gradient(with_constant, params));
}

TEST_CASE("adamw: zero gradient and zero decay leaves parameters unchanged") {
  ParamSet params{{"w", Tensor::matrix(1, 3, {1.0, -2.0, 3.0})}};
  const ParamSet before = params;
  OptState state;
  state.hyper.weight_decay = 0.0;
  adamw_step(params, {{"w", Tensor::zeros(1, 3)}}, state);
  CHECK(params == before);
  CHECK(state.step == 1);
}

TEST_CASE("adamw: zero gradient with decay shrinks by (1 - lr*wd)") {
  ParamSet params{{"w", Tensor::matrix(1, 2, {2.0, -4.0})}};
  OptState state;
  state.hyper.learning_rate = 0.1;
  state.hyper.weight_decay = 0.5;
  adamw_step(params, {{"w", Tensor::zeros(1, 2)}}, state);
  CHECK(params.at("w")(0, 0) == doctest::Approx(2.0 * 0.95));
  CHECK(params.at("w")(0, 1) == doctest::Approx(-4.0 * 0.95));
}

TEST_CASE("adamw: first step moves by -lr*g/(|g|+eps)") {
  const Tensor g = Tensor::matrix(1, 3, {0.5, -2.0, 1e-3});
  ParamSet params{{"w", Tensor::zeros(1, 3)}};
  OptState state;
  state.hyper.weight_decay = 0.0;
  state.hyper.learning_rate = 0.01;
  adamw_step(params, {{"w", g}}, state);
  for (std::size_t j = 0; j < 3; ++j) {
    const double gj = g(0, j);
    CHECK(params.at("w")(0, j) == doctest::Approx(-0.01 * gj / (std::abs(gj) + 1e-8)).epsilon(1e-9));
  }
}

TEST_CASE("adamw: rejects mismatched or non-finite gradients") {
  ParamSet params{{"w", Tensor::zeros(1, 2)}};
  OptState state;
  CHECK_THROWS_AS(adamw_step(params, {{"w", Tensor::zeros(2, 1)}}, state), ValidationError);
  CHECK_THROWS_AS(adamw_step(params, {{"v", Tensor::zeros(1, 2)}}, state), ValidationError);
  CHECK_THROWS(adamw_step(params, {{"w", Tensor::matrix(1, 2, {NAN, 0.0})}}, state));
  CHECK(state.step == 0);
}

TEST_CASE("clip_global_norm") {
  SUBCASE("below the limit is unchanged") {
    GradMap g{{"a", Tensor::matrix(1, 2, {0.3, 0.4})}};
    const GradMap before = g;
    CHECK(clip_global_norm(g, 1.0) == doctest::Approx(0.5));
    CHECK(g == before);
  }
  SUBCASE("norm 2 is halved") {
    GradMap g{{"a", Tensor::matrix(1, 2, {1.2, 0.0})}, {"b", Tensor::matrix(1, 1, {1.6})}};
    CHECK(clip_global_norm(g, 1.0) == doctest::Approx(2.0));
    CHECK(g.at("a")(0, 0) == doctest::Approx(0.6));
    CHECK(g.at("b")(0, 0) == doctest::Approx(0.8));
  }
  SUBCASE("zeros pass through") {
    GradMap g{{"a", Tensor::zeros(2, 2)}};
    clip_global_norm(g, 1.0);
    CHECK(g.at("a") == Tensor::zeros(2, 2));
  }
  SUBCASE("non-positive limit is rejected") {
    GradMap g{{"a", Tensor::zeros(1, 1)}};
    CHECK_THROWS_AS(clip_global_norm(g, 0.0), ValidationError);
  }
}

TEST_CASE("rng: same seed gives identical streams, split streams differ") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c = Rng(42).split("alpha"), d = Rng(42).split("alpha"), e = Rng(42).split("beta");
  const double vc = c.normal(), vd = d.normal(), ve = e.normal();
  CHECK(vc == vd);
  CHECK(vc != ve);
}

TEST_CASE("rng: uniform range and normal moments") {
  Rng rng(3);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK_UNARY(u >= 0.0 && u < 1.0);
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

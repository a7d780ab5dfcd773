// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/cli/selfcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>

#include "vggflow/align/losses.hpp"
#include "vggflow/baselines/adjoint.hpp"
#include "vggflow/flow/density.hpp"
#include "vggflow/flow/pretrain.hpp"
#include "vggflow/flow/sampler.hpp"
#include "vggflow/numcore/errors.hpp"
#include "vggflow/verify/bounds.hpp"
#include "vggflow/verify/brute_force.hpp"
#include "vggflow/verify/lq.hpp"
#include "vggflow/verify/metrics.hpp"

namespace vggflow::cli {

namespace {

std::string format(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

CheckResult timed(std::string name, const std::function<std::pair<bool, std::string>()>& body) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult out{std::move(name), false, "", 0.0};
  try {
    std::tie(out.passed, out.detail) = body();
  } catch (const std::exception& e) {
    out.passed = false;
    out.detail = std::string("error: ") + e.what();
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// Random composite graphs: a straight-line program over three-row tensors,
// replayed on a fresh tape for each evaluation.
enum class Op { Tanh, Silu, Relu, Square, Scale, Add, Sub, Mul, AddRow, Matmul, Concat, Slice };

struct Instr {
  Op op;
  std::size_t lhs = 0;
  std::size_t rhs = 0;
  double factor = 1.0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct Program {
  std::vector<Instr> body;
  /// Reduction of the last slot: mean when true, sum otherwise.
  bool mean = false;
  std::size_t distance_with = 0;
  bool distance = false;
};

constexpr std::size_t kRows = 3;
// Leaf slots: a [3,4], b [3,4], c [3,2]. Side parameters: r [1,4], w4 [4,4], w2 [2,4].
const std::vector<std::pair<const char*, std::size_t>> kLeaves{{"a", 4}, {"b", 4}, {"c", 2}};

ParamSet random_leaves(Rng& rng) {
  return {{"a", rng.normal_matrix(kRows, 4)}, {"b", rng.normal_matrix(kRows, 4)}, {"c", rng.normal_matrix(kRows, 2)},
          {"r", rng.normal_matrix(1, 4)},     {"w4", rng.normal_matrix(4, 4, 0.5)}, {"w2", rng.normal_matrix(2, 4, 0.5)}};
}

Program random_program(Rng& rng) {
  Program p;
  std::vector<std::size_t> cols;
  for (const auto& leaf : kLeaves) cols.push_back(leaf.second);
  const std::size_t n_ops = 6 + rng.uniform_index(7);
  for (std::size_t k = 0; k < n_ops; ++k) {
    // Prefer recent slots so the graph stays connected and deep.
    auto pick = [&] { return cols.size() - 1 - std::min(cols.size() - 1, rng.uniform_index(3)); };
    Instr in{static_cast<Op>(rng.uniform_index(12))};
    in.lhs = pick();
    std::size_t out_cols = cols[in.lhs];
    switch (in.op) {
      case Op::Scale: in.factor = rng.uniform(-2.0, 2.0); break;
      case Op::Add:
      case Op::Sub:
      case Op::Mul: {
        std::vector<std::size_t> same;
        for (std::size_t s = 0; s < cols.size(); ++s)
          if (cols[s] == cols[in.lhs]) same.push_back(s);
        in.rhs = same[rng.uniform_index(same.size())];
        break;
      }
      case Op::AddRow:
        if (cols[in.lhs] != 4) in.op = Op::Tanh;
        break;
      case Op::Matmul: out_cols = 4; break;
      case Op::Concat:
        in.rhs = rng.uniform_index(cols.size());
        out_cols = cols[in.lhs] + cols[in.rhs];
        if (out_cols > 8) {
          in.op = Op::Silu;
          out_cols = cols[in.lhs];
        }
        break;
      case Op::Slice:
        if (cols[in.lhs] < 2) {
          in.op = Op::Square;
          break;
        }
        in.begin = rng.uniform_index(cols[in.lhs] - 1);
        in.end = in.begin + 1 + rng.uniform_index(cols[in.lhs] - in.begin - 1);
        out_cols = in.end - in.begin;
        break;
      default: break;
    }
    p.body.push_back(in);
    cols.push_back(out_cols);
  }
  const std::size_t last = cols.size() - 1;
  if (rng.uniform() < 0.3) {
    for (std::size_t s = 0; s < last; ++s) {
      if (cols[s] == cols[last]) {
        p.distance_with = s;
        p.distance = true;
      }
    }
  }
  p.mean = rng.uniform() < 0.5;
  return p;
}

Var replay(Tape& tape, const ParamSet& params, const Program& p) {
  std::vector<Var> slots;
  for (const auto& leaf : kLeaves) slots.push_back(tape.param(leaf.first, params.at(leaf.first)));
  for (const Instr& in : p.body) {
    const Var a = slots[in.lhs];
    Var out = a;
    switch (in.op) {
      case Op::Tanh: out = tape.tanh(a); break;
      case Op::Silu: out = tape.silu(a); break;
      case Op::Relu: out = tape.relu(a); break;
      // Squares pass through tanh to keep magnitudes bounded in deep chains.
      case Op::Square: out = tape.tanh(tape.square(a)); break;
      case Op::Scale: out = tape.scale(a, in.factor); break;
      case Op::Add: out = tape.add(a, slots[in.rhs]); break;
      case Op::Sub: out = tape.sub(a, slots[in.rhs]); break;
      case Op::Mul: out = tape.mul(a, slots[in.rhs]); break;
      case Op::AddRow: out = tape.add(a, tape.param("r", params.at("r"))); break;
      case Op::Matmul: {
        const std::size_t c = tape.value(a).cols();
        const std::string w = c == 4 ? "w4" : c == 2 ? "w2" : "";
        if (w.empty()) {
          // Widths other than 2 and 4 come from concat or slice; project with a fixed matrix.
          Tensor m = Tensor::zeros(c, 4);
          for (std::size_t i = 0; i < c; ++i) m(i, i % 4) = 0.5 + 0.1 * static_cast<double>(i);
          out = tape.matmul(a, tape.constant(m));
        } else {
          out = tape.matmul(a, tape.param(w, params.at(w)));
        }
        break;
      }
      case Op::Concat: out = tape.concat(a, slots[in.rhs]); break;
      case Op::Slice: out = tape.slice(a, in.begin, in.end); break;
    }
    slots.push_back(out);
  }
  const Var last = slots.back();
  if (p.distance) return tape.squared_distance(last, slots[p.distance_with]);
  return p.mean ? tape.mean(last) : tape.sum(last);
}

double graph_value(const ParamSet& params, const Program& p) {
  Tape tape;
  return tape.value(replay(tape, params, p)).item();
}

double gradient_relative_error(ParamSet params, const Program& p) {
  Tape tape;
  const GradMap analytic = backward(tape, replay(tape, params, p));
  constexpr double h = 1e-6;
  double diff = 0.0, scale = 1e-12;
  for (auto& [name, value] : params) {
    const auto it = analytic.find(name);
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value.data()[i];
      value.data()[i] = saved + h;
      const double up = graph_value(params, p);
      value.data()[i] = saved - h;
      const double down = graph_value(params, p);
      value.data()[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double an = it == analytic.end() ? 0.0 : it->second.data()[i];
      diff = std::max(diff, std::abs(an - fd));
      scale = std::max(scale, std::abs(fd));
    }
  }
  return diff / scale;
}

}  // namespace

CheckResult check_autodiff(std::size_t n_graphs, std::uint64_t seed) {
  return timed("autodiff_vs_finite_differences", [&] {
    Rng rng(seed);
    double worst = 0.0;
    for (std::size_t g = 0; g < n_graphs; ++g) {
      const Program p = random_program(rng);
      worst = std::max(worst, gradient_relative_error(random_leaves(rng), p));
    }
    return std::pair{worst < 1e-5, format("%zu graphs, worst relative error %.3g (limit 1e-5)", n_graphs, worst)};
  });
}

CheckResult check_riccati_cross_oracle(std::size_t n_instances, std::uint64_t seed) {
  return timed("riccati_vs_brute_force", [&] {
    Rng rng(seed);
    double worst = 0.0;
    for (std::size_t k = 0; k < n_instances; ++k) {
      const verify::LqProblem prob = verify::random_lq_problem(2, 0.3, rng);
      const Tensor x0 = rng.normal_matrix(1, 2);
      const auto sol = verify::riccati_solve(prob, 1000);
      const auto bf = verify::brute_force_control(prob, x0.data(), 100);
      worst = std::max(worst, verify::feedback_gap_rms(prob, sol, bf));
    }
    return std::pair{worst < 1e-3, format("%zu instances, worst RMS gap %.3g (limit 1e-3)", n_instances, worst)};
  });
}

CheckResult check_riccati_scalar() {
  return timed("riccati_scalar_closed_form", [] {
    double worst = 0.0;
    for (const auto& [H, lambda] : {std::pair{2.0, 0.5}, std::pair{0.7, 3.0}, std::pair{5.0, 1.0}}) {
      const verify::LqProblem prob{Tensor::zeros(1, 1), Tensor::matrix(1, 1, {H}), Tensor::matrix(1, 1, {0.3}), lambda};
      const auto sol = verify::riccati_solve(prob, 1000);
      for (std::size_t i = 0; i < sol.times.size(); ++i) {
        const double closed = lambda * H / (lambda + H * (1.0 - sol.times[i]));
        worst = std::max(worst, std::abs(sol.P[i](0, 0) - closed));
      }
    }
    return std::pair{worst < 1e-8, format("max |P - closed form| %.3g (limit 1e-8)", worst)};
  });
}

CheckResult check_hjb_consistency(std::uint64_t seed) {
  return timed("oracle_hjb_consistency", [&] {
    const verify::LqProblem prob = verify::bundled_lq_problem();
    const verify::LqValueGradient g(verify::riccati_solve(prob, 1000));
    const flow::FieldPtr base = prob.base_field();
    Rng rng(seed);
    constexpr std::size_t n = 64;
    const flow::Trajectory traj = flow::integrate(*base, rng.normal_matrix(n, 2), {});
    align::ResidualOptions opts;
    opts.beta = prob.beta();
    double worst = 0.0, mean = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < traj.steps(); ++k) {
      const auto t = flow::repeat_time(n, traj.times[k]);
      Tape tape;
      const Tensor r = tape.value(
          align::consistency_residual(tape, g, *base, traj.states[k], t, align::shrink_eps(t, 1e-3), opts));
      const auto norms = kernels::row_norms(r);
      const auto xn = kernels::row_norms(traj.states[k]);
      for (std::size_t i = 0; i < n; ++i) {
        const double ratio = norms[i] / (1.0 + xn[i]);
        worst = std::max(worst, ratio);
        mean += ratio;
        ++count;
      }
    }
    mean /= static_cast<double>(count);
    return std::pair{worst < 5e-3,
                     format("||R||/(1+||x||): mean %.3g, max %.3g (limit 5e-3 on the max)", mean, worst)};
  });
}

CheckResult check_pmp_equivalence(std::uint64_t seed) {
  return timed("pmp_costate_equals_value_gradient", [&] {
    const verify::LqProblem prob = verify::bundled_lq_problem();
    const auto sol = verify::riccati_solve(prob, 1000);
    const verify::LqOptimalField optimal(prob, sol);
    Rng rng(seed);
    constexpr std::size_t n = 32;
    const flow::Trajectory traj =
        flow::integrate(optimal, rng.normal_matrix(n, 2), {.n_steps = 100, .integrator = flow::Integrator::Rk4});
    const auto adj = baselines::pmp_adjoint_solve(traj, optimal, *prob.base_field(), prob.reward(), prob.lambda);
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      worst = std::max(worst, max_abs_diff(adj.at(k), verify::lq_value_gradient(sol, traj.states[k],
                                                                                flow::repeat_time(n, traj.times[k]))));
    }
    return std::pair{worst < 1e-2, format("max |a - (Px + q)| %.3g (limit 1e-2)", worst)};
  });
}

CheckResult check_bundled_oracle(std::uint64_t seed) {
  return timed("bundled_lq_riccati_vs_brute_force", [&] {
    const verify::LqProblem prob = verify::bundled_lq_problem();
    const auto sol = verify::riccati_solve(prob, 1000);
    Rng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      const Tensor x0 = rng.normal_matrix(1, 2);
      worst = std::max(worst, verify::feedback_gap_rms(prob, sol, verify::brute_force_control(prob, x0.data(), 100)));
    }
    const double base = verify::lq_base_mean_reward(prob), opt = verify::lq_optimal_mean_reward(prob, sol);
    return std::pair{worst < 1e-3, format("worst RMS gap %.3g (limit 1e-3); base reward %.4f, optimal %.4f", worst,
                                          base, opt)};
  });
}

CheckResult check_w2_bound_hand() {
  return timed("w2_bound_constant_field", [] {
    Rng rng(0);
    const Tensor c = Tensor::matrix(1, 2, {0.6, -0.8});
    const flow::ConstantField shifted(c);
    const flow::LinearField zero(Tensor::zeros(2, 2));
    const verify::W2Bound b = verify::w2_bound_check(shifted, zero, 16, 10, rng);
    const double c2 = kernels::squared_norm(c);
    const double lhs_err = std::abs(b.lhs - c2), rhs_err = std::abs(b.rhs - std::numbers::e * c2);
    const bool ok = lhs_err < 1e-12 && rhs_err < 1e-12 && b.holds;
    return std::pair{ok, format("lhs %.15g (expect %.15g), rhs %.15g (expect %.15g)", b.lhs, c2, b.rhs,
                                std::numbers::e * c2)};
  });
}

CheckResult check_w2_bound_random(const flow::FieldPtr& base, std::size_t n_fields, std::uint64_t seed) {
  return timed("w2_bound_random_residuals", [&] {
    Rng rng(seed);
    const double L = verify::lipschitz_estimate(*base, rng);
    std::size_t held = 0;
    double tightest = 0.0;
    const nets::MlpSpec spec{.input_dim = 2, .time_embed_dim = 4, .hidden = {16, 16}, .output_dim = 2};
    for (std::size_t k = 0; k < n_fields; ++k) {
      nets::Mlp residual = nets::Mlp::initialize(spec, rng);
      const double s = rng.uniform(0.05, 0.5);
      for (auto& [name, value] : residual.params())
        if (name == nets::layer_weight_name(spec.hidden.size())) value = kernels::scale(value, s);
      const flow::FinetunedField v(base, std::move(residual));
      const verify::W2Bound b = verify::w2_bound_check(v, *base, 256, 20, rng, L);
      held += b.holds;
      tightest = std::max(tightest, b.lhs / b.rhs);
    }
    return std::pair{held == n_fields, format("%zu/%zu fields satisfy lhs <= rhs (L = %.3g, max lhs/rhs %.3g)", held,
                                              n_fields, L, tightest)};
  });
}

CheckResult check_kl_identity(std::uint64_t seed) {
  return timed("kl_identity_gaussian_pairs", [&] {
    bool ok = true;
    std::string detail;
    for (const auto& [a, b] : {std::pair{0.1, 1.0}, std::pair{0.25, 3.0}}) {
      const flow::LinearField vp(Tensor::matrix(1, 1, {std::log(a)}));
      const flow::LinearField vq(Tensor::matrix(1, 1, {std::log(b)}));
      Rng rng(seed);
      const verify::KlResult r = verify::kl_between_flows(vp, vq, {.n_samples = 4096, .n_steps = 40}, rng);
      const double closed = std::log(b / a) + a * a / (2.0 * b * b) - 0.5;
      const double e_mc = std::abs(r.kl - closed) / closed, e_rhs = std::abs(r.identity_rhs - closed) / closed;
      ok = ok && e_mc <= 0.02 && e_rhs <= 0.02;
      detail += format("(%.2g,%.2g): closed %.4f, MC %.4f (%.2f%%), RHS %.4f (%.2f%%); ", a, b, closed, r.kl,
                       100.0 * e_mc, r.identity_rhs, 100.0 * e_rhs);
    }
    detail += "limit 2%";
    return std::pair{ok, detail};
  });
}

CheckResult check_density_kernels(std::uint64_t seed) {
  return timed("divergence_and_density_kernels", [&] {
    Rng rng(seed);
    const Tensor A = Tensor::matrix(2, 2, {0.3, -0.4, 0.2, -0.1});
    const flow::LinearField v(A);
    const Tensor x = rng.normal_matrix(16, 2);
    double div_err = 0.0;
    for (double d : flow::divergence_fd(v, x, flow::repeat_time(16, 0.5))) div_err = std::max(div_err, std::abs(d - 0.2));
    // Constant field: the pushforward is N(c, I).
    const flow::ConstantField shift(Tensor::matrix(1, 2, {0.5, -1.0}));
    const auto dens = flow::log_density(shift, x, 20);
    double dens_err = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
      const double dx = x(i, 0) - 0.5, dy = x(i, 1) + 1.0;
      const double exact = -std::log(2.0 * std::numbers::pi) - 0.5 * (dx * dx + dy * dy);
      dens_err = std::max(dens_err, std::abs(dens.log_density[i] - exact));
    }
    return std::pair{div_err < 1e-8 && dens_err < 1e-10,
                     format("divergence error %.3g (limit 1e-8), log-density error %.3g (limit 1e-10)", div_err,
                            dens_err)};
  });
}

flow::FieldPtr quick_base(std::uint64_t seed) {
  Rng rng(seed);
  const nets::MlpSpec spec{.input_dim = 2, .time_embed_dim = 8, .hidden = {32, 32}, .output_dim = 2};
  flow::PretrainConfig cfg;
  cfg.steps = 400;
  cfg.batch = 128;
  return std::make_shared<flow::MlpField>(
      flow::pretrain_rectified_flow(flow::default_mixture(), spec, cfg, rng).net);
}

std::vector<CheckResult> oracle_suite(std::uint64_t seed) {
  return {check_bundled_oracle(seed), check_riccati_cross_oracle(5, seed), check_riccati_scalar(),
          check_hjb_consistency(seed), check_pmp_equivalence(seed)};
}

std::vector<CheckResult> selfcheck_suite(std::uint64_t seed) {
  std::vector<CheckResult> out{check_autodiff(24, seed), check_density_kernels(seed)};
  for (auto& c : oracle_suite(seed)) out.push_back(std::move(c));
  out.push_back(check_w2_bound_hand());
  out.push_back(check_w2_bound_random(quick_base(seed), 20, seed));
  out.push_back(check_kl_identity(seed));
  return out;
}

nlohmann::ordered_json checks_json(const std::vector<CheckResult>& checks) {
  nlohmann::ordered_json out;
  out["passed"] = all_passed(checks);
  out["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    out["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}, {"seconds", c.seconds}});
  }
  return out;
}

bool all_passed(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

}  // namespace vggflow::cli

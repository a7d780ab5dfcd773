// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/verify/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "vggflow/flow/density.hpp"
#include "vggflow/flow/sampler.hpp"
#include "vggflow/numcore/errors.hpp"

namespace vggflow::verify {

namespace {

double sorted_w2(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

std::vector<double> project(const Tensor& x, std::span<const double> dir) {
  std::vector<double> out(x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out[i] += x(i, j) * dir[j];
  return out;
}

}  // namespace

std::vector<std::size_t> min_cost_assignment(const Tensor& cost) {
  const std::size_t n = cost.rows();
  if (cost.rank() != 2 || cost.cols() != n) throw ValidationError("assignment: cost matrix must be square");
  // Shortest augmenting paths with row/column potentials; 1-based internally.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t row = 1; row <= n; ++row) {
    match[0] = row;
    std::size_t col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[col0] = true;
      const std::size_t r0 = match[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(r0 - 1, j - 1) - u[r0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = col0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          col1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<std::size_t> out(n);
  for (std::size_t j = 1; j <= n; ++j) out[match[j] - 1] = j - 1;
  return out;
}

W2Result w2_distance(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols()) throw ValidationError("w2: sample dims differ");
  if (a.rows() != b.rows()) {
    throw ValidationError("w2: unequal sample counts " + std::to_string(a.rows()) + " and " + std::to_string(b.rows()));
  }
  if (a.rows() == 0) throw ValidationError("w2: empty sample sets");
  const std::size_t n = a.rows(), d = a.cols();
  if (d == 1) return {sorted_w2({a.data().begin(), a.data().end()}, {b.data().begin(), b.data().end()}), true};
  if (n <= kExactAssignmentLimit) {
    Tensor cost = Tensor::zeros(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += (a(i, c) - b(j, c)) * (a(i, c) - b(j, c));
        cost(i, j) = s;
      }
    const auto match = min_cost_assignment(cost);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cost(i, match[i]);
    return {total / static_cast<double>(n), true};
  }
  // Sliced estimate scaled by d, so a translation by c averages to ‖c‖².
  Rng rng(0x51CEDULL);
  double total = 0.0;
  for (std::size_t p = 0; p < kSlicedProjections; ++p) {
    Tensor dir = rng.normal_matrix(1, d);
    const double norm = std::sqrt(kernels::squared_norm(dir));
    for (double& v : dir.data()) v /= norm;
    total += sorted_w2(project(a, dir.data()), project(b, dir.data()));
  }
  return {static_cast<double>(d) * total / static_cast<double>(kSlicedProjections), false};
}

double diversity(const Tensor& samples) {
  if (samples.rank() != 2 || samples.rows() < 2) throw ValidationError("diversity: need at least 2 samples");
  const std::size_t n = samples.rows();
  double total = 0.0;
  for (std::size_t j = 0; j < samples.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += samples(i, j);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (samples(i, j) - mean) * (samples(i, j) - mean);
    total += ss / static_cast<double>(n - 1);
  }
  return total;
}

KlResult kl_between_flows(const flow::VelocityField& v_p, const flow::VelocityField& v_q, const KlConfig& cfg,
                          Rng& rng) {
  if (v_p.dim() != v_q.dim()) throw ValidationError("kl: field dims differ");
  if (cfg.n_samples < 2 || cfg.n_steps < 1) throw ValidationError("kl: need >= 2 samples and >= 1 step");
  const std::size_t n = cfg.n_samples, d = v_p.dim();
  const flow::Trajectory traj =
      flow::integrate(v_p, rng.normal_matrix(n, d), {.n_steps = cfg.n_steps, .integrator = flow::Integrator::Rk4});

  KlResult out;
  const auto log_p = flow::log_density(v_p, traj.terminal(), cfg.n_steps).log_density;
  const auto log_q = flow::log_density(v_q, traj.terminal(), cfg.n_steps).log_density;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = log_p[i] - log_q[i];
    if (!std::isfinite(r)) throw NumericalError("kl: non-finite log density", static_cast<std::ptrdiff_t>(i));
    sum += r;
    sum_sq += r * r;
  }
  out.kl = sum / static_cast<double>(n);
  const double var = (sum_sq - static_cast<double>(n) * out.kl * out.kl) / static_cast<double>(n - 1);
  out.stderr_kl = std::sqrt(std::max(var, 0.0) / static_cast<double>(n));

  // Per-time sample means of the identity integrand and of the three terms.
  const std::size_t grid = traj.times.size();
  std::vector<double> rhs(grid), term_a(grid), term_b(grid), term_c(grid);
  const double h = cfg.score_step;
  for (std::size_t k = 0; k < grid; ++k) {
    const double t = traj.times[k];
    const Tensor& x = traj.states[k];
    const auto ts = flow::repeat_time(n, t);
    const Tensor residual = kernels::sub(v_p.eval(x, ts), v_q.eval(x, ts));
    const auto div_p = flow::divergence_fd(v_p, x, ts), div_q = flow::divergence_fd(v_q, x, ts);

    Tensor probes = Tensor::zeros(2 * d * n, d);
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t r = (2 * j + s) * n + i;
          for (std::size_t c = 0; c < d; ++c) probes(r, c) = x(i, c);
          probes(r, j) += s == 0 ? h : -h;
        }
    const auto log_q_t = flow::log_density_at(v_q, probes, t, cfg.n_steps).log_density;

    double acc_rhs = 0.0, acc_a = 0.0, acc_b = 0.0, acc_c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0, score_sq = 0.0, res_sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double score = (log_q_t[2 * j * n + i] - log_q_t[(2 * j + 1) * n + i]) / (2.0 * h);
        dot += residual(i, j) * score;
        score_sq += score * score;
        res_sq += residual(i, j) * residual(i, j);
      }
      const double div = div_p[i] - div_q[i];
      acc_rhs += -dot - div;
      acc_a += 0.5 * res_sq;
      acc_b += 0.5 * score_sq;
      acc_c += div;
    }
    const double inv = 1.0 / static_cast<double>(n);
    rhs[k] = acc_rhs * inv;
    term_a[k] = acc_a * inv;
    term_b[k] = acc_b * inv;
    term_c[k] = acc_c * inv;
    if (!std::isfinite(rhs[k]) || !std::isfinite(term_b[k])) {
      throw NumericalError("kl: non-finite score at t = " + std::to_string(t), static_cast<std::ptrdiff_t>(k));
    }
  }
  auto trapezoid = [&](const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < grid; ++k) s += 0.5 * (f[k] + f[k + 1]) * (traj.times[k + 1] - traj.times[k]);
    return s;
  };
  out.identity_rhs = trapezoid(rhs);
  out.term_a = trapezoid(term_a);
  out.term_b = trapezoid(term_b);
  out.term_c = trapezoid(term_c);
  return out;
}

std::string report_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["mean_reward"] = r.mean_reward;
  j["diversity"] = r.diversity;
  j["w2_to_base"] = r.w2_to_base;
  j["w2_exact"] = r.w2_exact;
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("kl_to_base", r.kl_to_base);
  put("kl_stderr", r.kl_stderr);
  if (r.bound_lhs && r.bound_rhs) {
    j["w2_bound"] = {{"lhs", *r.bound_lhs}, {"rhs", *r.bound_rhs}, {"holds", *r.bound_lhs <= *r.bound_rhs * (1.0 + 1e-6)}};
  }
  if (r.kl_term_a && r.kl_term_b && r.kl_term_c && r.kl_identity_rhs && r.kl_to_base) {
    j["kl_identity"] = {{"term_a", *r.kl_term_a},
                        {"term_b", *r.kl_term_b},
                        {"term_c", *r.kl_term_c},
                        {"lhs", *r.kl_to_base},
                        {"rhs", *r.kl_identity_rhs}};
  }
  return j.dump(2);
}

void write_report(const std::filesystem::path& path, const MetricReport& report) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  out << report_json(report) << '\n';
}

}  // namespace vggflow::verify

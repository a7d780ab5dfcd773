// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/align/transitions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vggflow/numcore/errors.hpp"

namespace vggflow::align {

std::vector<std::pair<std::size_t, std::size_t>> step_bins(std::size_t n_steps, std::size_t bins) {
  if (bins < 1) throw ValidationError("subsample: bins must be >= 1");
  if (bins > n_steps) {
    throw ValidationError("subsample: " + std::to_string(bins) + " bins exceed " + std::to_string(n_steps) + " steps");
  }
  const std::size_t base = n_steps / bins, extra = n_steps % bins;
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(bins);
  std::size_t begin = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t len = base + (b < extra ? 1 : 0);
    out.emplace_back(begin, begin + len);
    begin += len;
  }
  return out;
}

std::vector<std::size_t> subsample_steps(std::size_t n_steps, std::size_t bins, Rng& rng) {
  std::vector<std::size_t> out;
  for (const auto& [begin, end] : step_bins(n_steps, bins)) out.push_back(begin + rng.uniform_index(end - begin));
  return out;
}

TransitionBatch subsample_transitions(const flow::Trajectory& traj, std::size_t bins, Rng& rng) {
  const std::size_t n = traj.steps();
  const std::size_t rows = traj.batch(), d = traj.terminal().cols();
  const auto groups = step_bins(n, bins);
  TransitionBatch out{Tensor::zeros(rows * bins, d), {}, {}, Tensor::zeros(rows * bins, d), traj.terminal()};
  out.times.reserve(rows * bins);
  out.steps.reserve(rows * bins);
  std::size_t r = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (const auto& [begin, end] : groups) {
      const std::size_t step = begin + rng.uniform_index(end - begin);
      const auto x = traj.states[step].row_span(i);
      const auto v = traj.velocities[step].row_span(i);
      std::copy(x.begin(), x.end(), out.states.row_span(r).begin());
      std::copy(v.begin(), v.end(), out.velocities.row_span(r).begin());
      out.times.push_back(traj.times[step]);
      out.steps.push_back(step);
      ++r;
    }
  }
  return out;
}

TransitionBatch jitter_within_steps(TransitionBatch batch, double dt, Rng& rng) {
  if (!(dt > 0.0)) throw ValidationError("jitter: step must be positive");
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const double shift = rng.uniform() * dt;
    auto x = batch.states.row_span(r);
    const auto v = batch.velocities.row_span(r);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] += shift * v[j];
    batch.times[r] += shift;
  }
  return batch;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw ValidationError("percentile: empty input");
  if (!(p > 0.0 && p <= 100.0)) throw ValidationError("percentile: p must lie in (0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double clip_threshold(const Tensor& vectors, double p) {
  if (vectors.rank() != 2 || vectors.rows() == 0) throw ValidationError("percentile_clip: empty list");
  return percentile(kernels::row_norms(vectors), p);
}

Tensor clip_rows(const Tensor& vectors, double tau) {
  // Rows already rescaled to τ may carry a norm a few ulps above it; the
  // slack keeps a second pass from touching them.
  const double limit = tau * (1.0 + 8.0 * std::numeric_limits<double>::epsilon());
  Tensor out = vectors;
  const auto norms = kernels::row_norms(vectors);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    if (norms[i] > limit) {
      const double s = tau / norms[i];
      for (double& v : out.row_span(i)) v *= s;
    }
  }
  return out;
}

Tensor percentile_clip(const Tensor& vectors, double p) { return clip_rows(vectors, clip_threshold(vectors, p)); }

}  // namespace vggflow::align

// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "vggflow/flow/sampler.hpp"

namespace vggflow::align {

/// Transitions drawn from a batch of trajectories, one row each, plus the
/// terminal state of every trajectory.
struct TransitionBatch {
  Tensor states;
  std::vector<double> times;
  std::vector<std::size_t> steps;
  Tensor velocities;
  Tensor terminals;

  std::size_t size() const noexcept { return times.size(); }
};

/// Splits steps 0..n-1 into `bins` contiguous groups, the first n % bins of
/// them one step longer. Returns [begin, end) per group.
std::vector<std::pair<std::size_t, std::size_t>> step_bins(std::size_t n_steps, std::size_t bins);

/// Step indices chosen for one trajectory: one uniform draw per bin.
std::vector<std::size_t> subsample_steps(std::size_t n_steps, std::size_t bins, Rng& rng);

/// One transition per bin for every trajectory in the batch.
TransitionBatch subsample_transitions(const flow::Trajectory& traj, std::size_t bins, Rng& rng);

/// Moves every row a uniform fraction of its step along its stored velocity,
/// so sampled times cover each grid interval instead of its left end only.
/// `times` advance by the same fraction of `dt`.
TransitionBatch jitter_within_steps(TransitionBatch batch, double dt, Rng& rng);

/// Linear-interpolation percentile (p in (0, 100]) of `values`.
double percentile(std::vector<double> values, double p);

/// Threshold τ: the p-th percentile of the row norms of `vectors`.
double clip_threshold(const Tensor& vectors, double p);

/// Rows with norm above `tau` rescaled to norm `tau`.
Tensor clip_rows(const Tensor& vectors, double tau);

/// clip_rows(vectors, clip_threshold(vectors, p)).
Tensor percentile_clip(const Tensor& vectors, double p);

}  // namespace vggflow::align

// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "vggflow/numcore/tape.hpp"

namespace vggflow::testing {

/// Builds a scalar graph from the current parameter values.
using GraphBuilder = std::function<Var(Tape&, const ParamSet&)>;

inline double eval_graph(const GraphBuilder& build, const ParamSet& params) {
  Tape tape;
  return tape.value(build(tape, params)).item();
}

inline GradMap tape_gradient(const GraphBuilder& build, const ParamSet& params) {
  Tape tape;
  return backward(tape, build(tape, params));
}

/// Central finite-difference gradient of every parameter entry.
inline GradMap fd_gradient(const GraphBuilder& build, ParamSet params, double step = 1e-6) {
  GradMap out;
  for (auto& [name, value] : params) {
    Tensor grad(value.shape(), std::vector<double>(value.size(), 0.0));
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value.data()[i];
      value.data()[i] = saved + step;
      const double up = eval_graph(build, params);
      value.data()[i] = saved - step;
      const double down = eval_graph(build, params);
      value.data()[i] = saved;
      grad.data()[i] = (up - down) / (2.0 * step);
    }
    out.emplace(name, std::move(grad));
  }
  return out;
}

/// Max-norm relative error, max|a-b| / max|b| across all tensors; names
/// missing from `a` count as zero.
inline double relative_error(const GradMap& a, const GradMap& b) {
  double diff = 0.0, scale = 1e-12;
  for (const auto& [name, tb] : b) {
    const auto it = a.find(name);
    for (std::size_t i = 0; i < tb.size(); ++i) {
      const double va = it == a.end() ? 0.0 : it->second.data()[i];
      diff = std::max(diff, std::abs(va - tb.data()[i]));
      scale = std::max(scale, std::abs(tb.data()[i]));
    }
  }
  return diff / scale;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace vggflow::testing

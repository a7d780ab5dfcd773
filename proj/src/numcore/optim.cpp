// Copyright (c) 2026 The vggflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "vggflow/numcore/optim.hpp"

#include <cmath>

#include "vggflow/numcore/errors.hpp"

namespace vggflow {

void adamw_step(ParamSet& params, const GradMap& grads, OptState& state) {
  if (grads.size() != params.size()) {
    throw ValidationError("adamw_step: " + std::to_string(grads.size()) + " gradients for " +
                          std::to_string(params.size()) + " parameters");
  }
  for (const auto& [name, p] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) throw ValidationError("adamw_step: missing gradient for '" + name + "'");
    if (it->second.shape() != p.shape()) {
      throw ValidationError("adamw_step: gradient shape " + shape_string(it->second.shape()) +
                            " does not match parameter '" + name + "' " + shape_string(p.shape()));
    }
    if (!it->second.all_finite()) throw NumericalError("adamw_step: non-finite gradient for '" + name + "'");
  }

  const AdamWHyper& h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(h.beta1, t);
  const double bc2 = 1.0 - std::pow(h.beta2, t);

  for (auto& [name, p] : params) {
    const Tensor& g = grads.at(name);
    auto [m_it, m_new] = state.first_moment.try_emplace(name, Tensor(p.shape(), std::vector<double>(p.size(), 0.0)));
    auto [v_it, v_new] = state.second_moment.try_emplace(name, Tensor(p.shape(), std::vector<double>(p.size(), 0.0)));
    auto m = m_it->second.data();
    auto v = v_it->second.data();
    auto pd = p.data();
    auto gd = g.data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * gd[i];
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * gd[i] * gd[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      pd[i] = pd[i] - h.learning_rate * h.weight_decay * pd[i] - h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
  }
}

double clip_global_norm(GradMap& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ValidationError("clip_global_norm: max_norm must be positive");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [name, g] : grads)
      for (double& v : g.data()) v *= s;
  }
  return norm;
}

}  // namespace vggflow

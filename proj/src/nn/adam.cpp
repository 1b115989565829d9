#include "topo/adam.hpp"

#include <cmath>

#include "topo/error.hpp"

namespace topo::nn {

void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state) {
  if (params.size() != grads.size()) fail(ErrorKind::shape, "adam: parameter/gradient group count mismatch");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) fail(ErrorKind::shape, "adam: state does not match parameter groups");
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (size_t g = 0; g < params.size(); ++g) {
    const auto p = params[g];
    const auto d = grads[g];
    auto& m = state.m[g];
    auto& v = state.v[g];
    if (p.size() != d.size() || p.size() != m.size()) fail(ErrorKind::shape, "adam: group size mismatch");
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * d[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * d[i] * d[i];
      p[i] -= state.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + state.eps);
    }
  }
}

}  // namespace topo::nn

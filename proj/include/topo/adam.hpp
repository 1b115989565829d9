#pragma once

#include <span>
#include <vector>

namespace topo::nn {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long t = 0;
  std::vector<std::vector<double>> m;  // one entry per parameter group
  std::vector<std::vector<double>> v;
};

// Bias-corrected ADAM over parameter groups. Moments are sized on first use.
void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state);

}  // namespace topo::nn

#pragma once

#include "topo/simp.hpp"
#include "topo/toponet.hpp"

namespace topo::eval {

struct HybridTiming {
  double simp_seconds = 0.0;
  double inference_seconds = 0.0;
  double total_seconds = 0.0;
};

struct HybridResult {
  fem::DensityField structure;   // binary
  fem::DensityField prediction;  // network output
  fem::DensityField density;     // SIMP density after n0 updates
  HybridTiming timing;
};

// n0 SIMP updates, one forward pass on (X_n0, X_n0 - X_{n0-1}), threshold at 0.5.
// Measured on a single thread.
HybridResult hybrid_solve(const fem::Problem& problem, int n0, const net::NetworkParams& params,
                          const simp::SimpConfig& config = {});

// Wall time of a plain SIMP run of `iterations` updates, single thread.
double time_simp(const fem::Problem& problem, int iterations, const simp::SimpConfig& config = {});

}  // namespace topo::eval

#pragma once

// SIMP compliance minimization: sensitivity filter, optimality-criteria
// update with a bisected volume multiplier, and history recording.

#include <span>
#include <vector>

#include "topo/fem.hpp"

namespace topo::simp {

using fem::DensityField;
using fem::MaterialModel;
using fem::Problem;

struct SimpConfig {
  int max_iters = 100;
  double move_limit = 0.2;
  double damping = 0.5;        // OC exponent eta
  double filter_radius = 1.5;  // in element widths
  MaterialModel material;

  void validate() const;
};

struct IterationHistory {
  Problem problem;
  std::vector<DensityField> frames;  // frames[k] is the density after update k + 1
  std::vector<double> compliances;   // compliances[k] belongs to frames[k]
};

// Mesh-independency filter with weights H_ij = max(0, rmin - dist(i, j)).
// The weight table is built once per grid.
class SensitivityFilter {
 public:
  SensitivityFilter(int nelx, int nely, double rmin);

  // dc_hat_j = sum_i H_ij x_i dc_i / (max(1e-3, x_j) sum_i H_ij)
  std::vector<double> apply(const DensityField& x, std::span<const double> dc) const;

 private:
  int nelx_;
  int nely_;
  std::vector<int> offsets_;     // CSR row starts, element_count + 1
  std::vector<int> neighbours_;
  std::vector<double> weights_;
  std::vector<double> weight_sums_;
};

std::vector<double> filter_sensitivities(const DensityField& x, std::span<const double> dc,
                                         double rmin);

DensityField oc_update(const DensityField& x, std::span<const double> dc_filtered,
                       double volume_fraction, double move_limit, double damping);

DensityField initial_density(const Problem& problem);

struct StepResult {
  DensityField next;
  double compliance = 0.0;  // compliance of the input density
};

// Holds the FE system and filter so repeated steps reuse the symbolic work.
class Optimizer {
 public:
  Optimizer(const Problem& problem, const SimpConfig& config);

  StepResult step(const DensityField& x);
  double compliance(const DensityField& x);

  const Problem& problem() const { return problem_; }
  const SimpConfig& config() const { return config_; }

 private:
  Problem problem_;
  SimpConfig config_;
  fem::FeSystem system_;
  SensitivityFilter filter_;
};

// solve -> sensitivities -> filter -> OC
StepResult step(const Problem& problem, const DensityField& x, const SimpConfig& config);

// Runs exactly config.max_iters updates from the uniform start.
IterationHistory optimize(const Problem& problem, const SimpConfig& config);

}  // namespace topo::simp

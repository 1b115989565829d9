#include "topo/simp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace topo::simp {

void SimpConfig::validate() const {
  if (max_iters < 1) fail(ErrorKind::invalid_parameter, "max_iters must be >= 1");
  if (!(move_limit > 0.0 && move_limit <= 1.0)) fail(ErrorKind::invalid_parameter, "move limit must lie in (0, 1]");
  if (!(damping > 0.0 && damping <= 1.0)) fail(ErrorKind::invalid_parameter, "damping must lie in (0, 1]");
  if (!(filter_radius >= 0.0)) fail(ErrorKind::invalid_parameter, "filter radius must be >= 0");
  material.validate();
}

SensitivityFilter::SensitivityFilter(int nelx, int nely, double rmin) : nelx_(nelx), nely_(nely) {
  const int reach = std::max(0, static_cast<int>(std::ceil(rmin)) - 1);
  const int nel = nelx * nely;
  offsets_.reserve(nel + 1);
  offsets_.push_back(0);
  weight_sums_.resize(nel);
  for (int row = 0; row < nely; ++row) {
    for (int col = 0; col < nelx; ++col) {
      double sum = 0.0;
      for (int r = std::max(0, row - reach); r <= std::min(nely - 1, row + reach); ++r) {
        for (int c = std::max(0, col - reach); c <= std::min(nelx - 1, col + reach); ++c) {
          const double w = rmin - std::hypot(row - r, col - c);
          if (w <= 0.0) continue;
          neighbours_.push_back(r * nelx + c);
          weights_.push_back(w);
          sum += w;
        }
      }
      weight_sums_[row * nelx + col] = sum;
      offsets_.push_back(static_cast<int>(neighbours_.size()));
    }
  }
}

std::vector<double> SensitivityFilter::apply(const DensityField& x, std::span<const double> dc) const {
  const int nel = nelx_ * nely_;
  if (x.nelx != nelx_ || x.nely != nely_ || static_cast<int>(dc.size()) != nel) {
    fail(ErrorKind::shape, "filter input shape mismatch");
  }
  std::vector<double> out(nel);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < nel; ++j) {
    if (weight_sums_[j] <= 0.0) {  // rmin == 0: nothing survives, keep the raw value
      out[j] = dc[j];
      continue;
    }
    double acc = 0.0;
    for (int k = offsets_[j]; k < offsets_[j + 1]; ++k) {
      const int i = neighbours_[k];
      acc += weights_[k] * x.values[i] * dc[i];
    }
    out[j] = acc / (std::max(1e-3, x.values[j]) * weight_sums_[j]);
  }
  return out;
}

std::vector<double> filter_sensitivities(const DensityField& x, std::span<const double> dc,
                                         double rmin) {
  return SensitivityFilter(x.nelx, x.nely, rmin).apply(x, dc);
}

DensityField oc_update(const DensityField& x, std::span<const double> dc_filtered,
                       double volume_fraction, double move_limit, double damping) {
  if (dc_filtered.size() != x.size()) fail(ErrorKind::shape, "sensitivity length mismatch");
  for (double d : dc_filtered) {
    if (!(d <= 0.0)) fail(ErrorKind::invalid_input, "OC update requires non-positive sensitivities");
  }
  const size_t n = x.size();
  DensityField next(x.nely, x.nelx);
  // x_j (-dc_j / lambda)^eta = [x_j (-dc_j)^eta] lambda^-eta
  std::vector<double> scaled(n), lower(n), upper(n);
  for (size_t j = 0; j < n; ++j) {
    const double xj = x.values[j];
    scaled[j] = xj * std::pow(-dc_filtered[j], damping);
    lower[j] = std::max(0.0, xj - move_limit);
    upper[j] = std::min(1.0, xj + move_limit);
  }
  auto update = [&](double lambda) {
    const double factor = std::pow(lambda, -damping);
    double total = 0.0;
    for (size_t j = 0; j < n; ++j) {
      next.values[j] = std::clamp(scaled[j] * factor, lower[j], upper[j]);
      total += next.values[j];
    }
    return total / static_cast<double>(n);
  };

  double lo = 1e-9;
  double hi = 1e9;
  double mean = 0.0;
  for (int halving = 0; halving < 200; ++halving) {
    const double mid = 0.5 * (lo + hi);
    mean = update(mid);
    if (std::abs(mean - volume_fraction) < 1e-9) return next;
    if (mean > volume_fraction) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-15 * hi) break;
  }
  if (std::abs(mean - volume_fraction) < 1e-4) return next;
  fail(ErrorKind::numeric_failure,
       "volume bisection did not converge: mean " + std::to_string(mean) + " vs target " +
           std::to_string(volume_fraction));
}

DensityField initial_density(const Problem& problem) {
  return DensityField(problem.nely, problem.nelx, problem.volume_fraction);
}

Optimizer::Optimizer(const Problem& problem, const SimpConfig& config)
    : problem_(problem),
      config_(config),
      system_((config.validate(), problem), config.material),
      filter_(problem.nelx, problem.nely, config.filter_radius) {}

StepResult Optimizer::step(const DensityField& x) {
  const Eigen::VectorXd u = system_.solve(x);
  const auto energies = system_.element_energies(u);
  const auto cs = fem::compliance_from_energies(x, config_.material, energies);
  const auto filtered = filter_.apply(x, cs.sensitivity);
  return {oc_update(x, filtered, problem_.volume_fraction, config_.move_limit, config_.damping),
          cs.compliance};
}

double Optimizer::compliance(const DensityField& x) {
  const Eigen::VectorXd u = system_.solve(x);
  return fem::compliance_from_energies(x, config_.material, system_.element_energies(u)).compliance;
}

StepResult step(const Problem& problem, const DensityField& x, const SimpConfig& config) {
  Optimizer opt(problem, config);
  return opt.step(x);
}

IterationHistory optimize(const Problem& problem, const SimpConfig& config) {
  Optimizer opt(problem, config);
  IterationHistory history;
  history.problem = problem;
  history.frames.reserve(config.max_iters);
  history.compliances.reserve(config.max_iters);
  DensityField x = initial_density(problem);
  for (int k = 0; k < config.max_iters; ++k) {
    try {
      StepResult r = opt.step(x);
      // The compliance computed inside step k + 1 belongs to frame k - 1.
      if (k > 0) history.compliances.push_back(r.compliance);
      x = std::move(r.next);
      history.frames.push_back(x);
    } catch (const Error& e) {
      throw e.with_context("iteration " + std::to_string(k + 1));
    }
  }
  try {
    history.compliances.push_back(opt.compliance(x));
  } catch (const Error& e) {
    throw e.with_context("final compliance");
  }
  return history;
}

}  // namespace topo::simp

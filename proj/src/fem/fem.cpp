#include "topo/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace topo::fem {

std::string to_string(Physics physics) {
  return physics == Physics::mechanical ? "mechanical" : "heat";
}

Physics physics_from_string(const std::string& name) {
  if (name == "mechanical") return Physics::mechanical;
  if (name == "heat") return Physics::heat;
  fail(ErrorKind::invalid_parameter, "unknown physics '" + name + "'");
}

void Problem::validate() const {
  if (nelx < 1 || nely < 1) {
    fail(ErrorKind::invalid_parameter, "grid must have at least one element per side");
  }
  if (fixed_dofs.empty()) fail(ErrorKind::invalid_parameter, "problem has no fixed dofs");
  if (loads.empty()) fail(ErrorKind::invalid_parameter, "problem has no loads");
  const int n = dof_count();
  for (int d : fixed_dofs) {
    if (d < 0 || d >= n) {
      fail(ErrorKind::invalid_parameter,
           "fixed dof " + std::to_string(d) + " outside [0, " + std::to_string(n) + ")");
    }
  }
  for (const Load& l : loads) {
    if (l.dof < 0 || l.dof >= n) {
      fail(ErrorKind::invalid_parameter,
           "load dof " + std::to_string(l.dof) + " outside [0, " + std::to_string(n) + ")");
    }
    if (!std::isfinite(l.magnitude)) fail(ErrorKind::invalid_parameter, "load magnitude not finite");
  }
  if (!(volume_fraction > 0.0 && volume_fraction < 1.0)) {
    fail(ErrorKind::invalid_parameter, "volume fraction must lie in (0, 1)");
  }
}

Problem mbb_beam(int nelx, int nely, double volume_fraction) {
  Problem p;
  p.nelx = nelx;
  p.nely = nely;
  p.physics = Physics::mechanical;
  p.volume_fraction = volume_fraction;
  for (int row = 0; row <= nely; ++row) p.fixed_dofs.push_back(2 * row);
  p.fixed_dofs.push_back(2 * ((nelx + 1) * (nely + 1)) - 1);
  p.loads.push_back({1, -1.0});
  return p;
}

void MaterialModel::validate() const {
  if (!(emin > 0.0 && emin < e0)) fail(ErrorKind::invalid_parameter, "require 0 < Emin < E0");
  if (!(penal >= 1.0)) fail(ErrorKind::invalid_parameter, "penalization exponent must be >= 1");
  if (!(nu >= 0.0 && nu < 0.5)) fail(ErrorKind::invalid_parameter, "Poisson ratio must lie in [0, 0.5)");
}

double MaterialModel::modulus(double density) const {
  return emin + std::pow(density, penal) * (e0 - emin);
}

double MaterialModel::modulus_derivative(double density) const {
  return penal * std::pow(density, penal - 1.0) * (e0 - emin);
}

double DensityField::mean() const {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

ElementStiffness element_stiffness_quad(double nu) {
  if (!(nu >= 0.0 && nu < 0.5)) {
    fail(ErrorKind::invalid_parameter, "Poisson ratio must lie in [0, 0.5)");
  }
  // Closed form of the 2x2 Gauss-integrated bilinear quad.
  const double k[8] = {0.5 - nu / 6.0,      0.125 + nu / 8.0,  -0.25 - nu / 12.0, -0.125 + 3.0 * nu / 8.0,
                       -0.25 + nu / 12.0,   -0.125 - nu / 8.0, nu / 6.0,          0.125 - 3.0 * nu / 8.0};
  const int pattern[8][8] = {{0, 1, 2, 3, 4, 5, 6, 7}, {1, 0, 7, 6, 5, 4, 3, 2},
                             {2, 7, 0, 5, 6, 3, 4, 1}, {3, 6, 5, 0, 7, 2, 1, 4},
                             {4, 5, 6, 7, 0, 1, 2, 3}, {5, 4, 3, 2, 1, 0, 7, 6},
                             {6, 3, 4, 1, 2, 7, 0, 5}, {7, 2, 1, 4, 3, 6, 5, 0}};
  ElementStiffness ke;
  const double scale = 1.0 / (1.0 - nu * nu);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) ke(i, j) = scale * k[pattern[i][j]];
  }
  return ke;
}

ElementConductivity element_conductivity_quad() {
  ElementConductivity ke;
  ke << 4, -1, -2, -1,
       -1, 4, -1, -2,
       -2, -1, 4, -1,
       -1, -2, -1, 4;
  return ke / 6.0;
}

std::array<int, 8> element_dofs_mechanical(int /*nelx*/, int nely, int elx, int ely) {
  const int tl = (nely + 1) * elx + ely;
  const int bl = tl + 1;
  const int tr = tl + nely + 1;
  const int br = tr + 1;
  return {2 * bl, 2 * bl + 1, 2 * br, 2 * br + 1, 2 * tr, 2 * tr + 1, 2 * tl, 2 * tl + 1};
}

std::array<int, 4> element_dofs_heat(int /*nelx*/, int nely, int elx, int ely) {
  const int tl = (nely + 1) * elx + ely;
  return {tl + 1, tl + nely + 2, tl + nely + 1, tl};
}

namespace {

std::vector<char> fixed_mask(const Problem& problem) {
  std::vector<char> fixed(problem.dof_count(), 0);
  for (int d : problem.fixed_dofs) fixed[d] = 1;
  return fixed;
}

}  // namespace

void check_well_posed(const Problem& problem) {
  problem.validate();
  const auto fixed = fixed_mask(problem);

  bool loaded = false;
  for (const Load& l : problem.loads) loaded = loaded || !fixed[l.dof];
  if (!loaded) fail(ErrorKind::ill_posed, "every load acts on a fixed dof");

  if (problem.physics == Physics::heat) return;  // one fixed node removes the constant mode

  // Rigid motions (tx, ty, rotation) must all be suppressed by the constraints.
  std::set<int> dofs(problem.fixed_dofs.begin(), problem.fixed_dofs.end());
  Eigen::MatrixXd modes(static_cast<Eigen::Index>(dofs.size()), 3);
  Eigen::Index r = 0;
  for (int d : dofs) {
    const int node = d / 2;
    const double x = node / (problem.nely + 1);
    const double y = -(node % (problem.nely + 1));
    if (d % 2 == 0) {
      modes.row(r++) << 1.0, 0.0, -y;
    } else {
      modes.row(r++) << 0.0, 1.0, x;
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(modes);
  if (lu.rank() < 3) {
    fail(ErrorKind::ill_posed, "constraints leave a rigid-body mode (rank " +
                                   std::to_string(lu.rank()) + " of 3)");
  }
}

bool is_well_posed(const Problem& problem) {
  try {
    check_well_posed(problem);
    return true;
  } catch (const Error&) {
    return false;
  }
}

FeSystem::FeSystem(const Problem& problem, const MaterialModel& material)
    : problem_(problem), material_(material) {
  material_.validate();
  check_well_posed(problem_);

  const int nelx = problem_.nelx;
  const int nely = problem_.nely;
  const int nel = problem_.element_count();
  local_size_ = problem_.physics == Physics::mechanical ? 8 : 4;
  element_matrix_.resize(static_cast<size_t>(local_size_) * local_size_);
  if (problem_.physics == Physics::mechanical) {
    const ElementStiffness ke = element_stiffness_quad(material_.nu);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) element_matrix_[i * 8 + j] = ke(i, j);
  } else {
    const ElementConductivity ke = element_conductivity_quad();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) element_matrix_[i * 4 + j] = ke(i, j);
  }

  element_dofs_.resize(static_cast<size_t>(nel) * local_size_);
  for (int elx = 0; elx < nelx; ++elx) {
    for (int ely = 0; ely < nely; ++ely) {
      const int e = ely * nelx + elx;
      if (local_size_ == 8) {
        const auto d = element_dofs_mechanical(nelx, nely, elx, ely);
        std::copy(d.begin(), d.end(), element_dofs_.begin() + e * 8);
      } else {
        const auto d = element_dofs_heat(nelx, nely, elx, ely);
        std::copy(d.begin(), d.end(), element_dofs_.begin() + e * 4);
      }
    }
  }

  const auto fixed = fixed_mask(problem_);
  free_index_.assign(problem_.dof_count(), -1);
  for (int d = 0; d < problem_.dof_count(); ++d) {
    if (!fixed[d]) {
      free_index_[d] = static_cast<int>(free_dofs_.size());
      free_dofs_.push_back(d);
    }
  }
  const int nfree = static_cast<int>(free_dofs_.size());

  f_free_ = Eigen::VectorXd::Zero(nfree);
  for (const Load& l : problem_.loads) {
    if (free_index_[l.dof] >= 0) f_free_[free_index_[l.dof]] += l.magnitude;
  }

  // Lower-triangular pattern, then a per-element map from local entries to
  // positions in the compressed value array.
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(nel) * local_size_ * local_size_ / 2 + nel);
  for (int e = 0; e < nel; ++e) {
    const int* dofs = &element_dofs_[static_cast<size_t>(e) * local_size_];
    for (int a = 0; a < local_size_; ++a) {
      const int ra = free_index_[dofs[a]];
      if (ra < 0) continue;
      for (int b = 0; b < local_size_; ++b) {
        const int cb = free_index_[dofs[b]];
        if (cb < 0 || ra < cb) continue;
        triplets.emplace_back(ra, cb, 1.0);
      }
    }
  }
  k_free_.resize(nfree, nfree);
  k_free_.setFromTriplets(triplets.begin(), triplets.end());
  k_free_.makeCompressed();

  scatter_.assign(static_cast<size_t>(nel) * local_size_ * local_size_, -1);
  const int* outer = k_free_.outerIndexPtr();
  const int* inner = k_free_.innerIndexPtr();
  for (int e = 0; e < nel; ++e) {
    const int* dofs = &element_dofs_[static_cast<size_t>(e) * local_size_];
    for (int a = 0; a < local_size_; ++a) {
      const int ra = free_index_[dofs[a]];
      if (ra < 0) continue;
      for (int b = 0; b < local_size_; ++b) {
        const int cb = free_index_[dofs[b]];
        if (cb < 0 || ra < cb) continue;
        const int* begin = inner + outer[cb];
        const int* end = inner + outer[cb + 1];
        const int* pos = std::lower_bound(begin, end, ra);
        scatter_[(static_cast<size_t>(e) * local_size_ + a) * local_size_ + b] =
            static_cast<int>(pos - inner);
      }
    }
  }
  llt_.analyzePattern(k_free_);
}

void FeSystem::assemble(const DensityField& x) {
  const int nel = problem_.element_count();
  if (x.nelx != problem_.nelx || x.nely != problem_.nely || x.size() != static_cast<size_t>(nel)) {
    fail(ErrorKind::shape, "density field shape does not match the problem grid");
  }
  double* values = k_free_.valuePtr();
  std::fill(values, values + k_free_.nonZeros(), 0.0);
  const int ls2 = local_size_ * local_size_;
  for (int e = 0; e < nel; ++e) {
    const double stiffness = material_.modulus(x.values[e]);
    const int* map = &scatter_[static_cast<size_t>(e) * ls2];
    for (int i = 0; i < ls2; ++i) {
      if (map[i] >= 0) values[map[i]] += stiffness * element_matrix_[i];
    }
  }
}

Eigen::VectorXd FeSystem::solve(const DensityField& x) {
  for (double v : x.values) {
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorKind::invalid_input, "density outside [0, 1]");
  }
  assemble(x);
  llt_.factorize(k_free_);
  if (llt_.info() != Eigen::Success) {
    fail(ErrorKind::ill_posed, "stiffness matrix is not positive definite on the free dofs");
  }
  const Eigen::SparseMatrix<double> full = k_free_.selfadjointView<Eigen::Lower>();
  Eigen::VectorXd u_free = llt_.solve(f_free_);
  const double fnorm = f_free_.norm();
  Eigen::VectorXd residual = f_free_ - full * u_free;
  last_residual_ = fnorm > 0.0 ? residual.norm() / fnorm : residual.norm();
  // Iterative refinement for badly conditioned void-heavy layouts.
  for (int pass = 0; pass < 3 && last_residual_ >= 1e-10; ++pass) {
    u_free += llt_.solve(residual);
    residual = f_free_ - full * u_free;
    last_residual_ = fnorm > 0.0 ? residual.norm() / fnorm : residual.norm();
  }
  if (!std::isfinite(last_residual_) || last_residual_ >= 1e-8) {
    fail(ErrorKind::solver_failure,
         "linear solve did not converge, relative residual " + std::to_string(last_residual_));
  }
  Eigen::VectorXd u = Eigen::VectorXd::Zero(problem_.dof_count());
  for (size_t i = 0; i < free_dofs_.size(); ++i) u[free_dofs_[i]] = u_free[static_cast<Eigen::Index>(i)];
  return u;
}

std::vector<double> FeSystem::element_energies(const Eigen::VectorXd& u) const {
  if (u.size() != problem_.dof_count()) fail(ErrorKind::shape, "solution vector length mismatch");
  const int nel = problem_.element_count();
  std::vector<double> energies(nel);
  double ue[8];
  for (int e = 0; e < nel; ++e) {
    const int* dofs = &element_dofs_[static_cast<size_t>(e) * local_size_];
    for (int a = 0; a < local_size_; ++a) ue[a] = u[dofs[a]];
    double s = 0.0;
    for (int a = 0; a < local_size_; ++a) {
      double row = 0.0;
      for (int b = 0; b < local_size_; ++b) row += element_matrix_[a * local_size_ + b] * ue[b];
      s += ue[a] * row;
    }
    energies[e] = std::max(0.0, s);
  }
  return energies;
}

Eigen::VectorXd assemble_and_solve(const Problem& problem, const DensityField& x,
                                   const MaterialModel& material) {
  FeSystem system(problem, material);
  return system.solve(x);
}

ComplianceResult compliance_from_energies(const DensityField& x, const MaterialModel& material,
                                          std::span<const double> energies) {
  if (energies.size() != x.size()) fail(ErrorKind::invalid_input, "energy/density length mismatch");
  ComplianceResult r;
  r.sensitivity.resize(x.size());
  for (size_t e = 0; e < x.size(); ++e) {
    r.compliance += material.modulus(x.values[e]) * energies[e];
    r.sensitivity[e] = -material.modulus_derivative(x.values[e]) * energies[e];
  }
  return r;
}

ComplianceResult compliance_and_sensitivity(const Problem& problem, const DensityField& x,
                                            const MaterialModel& material,
                                            const Eigen::VectorXd& u) {
  if (x.nelx != problem.nelx || x.nely != problem.nely ||
      x.size() != static_cast<size_t>(problem.element_count())) {
    fail(ErrorKind::invalid_input, "density field shape does not match the problem grid");
  }
  if (u.size() != problem.dof_count()) fail(ErrorKind::invalid_input, "solution vector length mismatch");
  const int ls = problem.physics == Physics::mechanical ? 8 : 4;
  std::vector<double> km(static_cast<size_t>(ls) * ls);
  if (ls == 8) {
    const ElementStiffness ke = element_stiffness_quad(material.nu);
    for (int i = 0; i < 64; ++i) km[i] = ke(i / 8, i % 8);
  } else {
    const ElementConductivity ke = element_conductivity_quad();
    for (int i = 0; i < 16; ++i) km[i] = ke(i / 4, i % 4);
  }
  std::vector<double> energies(x.size());
  for (int elx = 0; elx < problem.nelx; ++elx) {
    for (int ely = 0; ely < problem.nely; ++ely) {
      double ue[8];
      if (ls == 8) {
        const auto d = element_dofs_mechanical(problem.nelx, problem.nely, elx, ely);
        for (int a = 0; a < 8; ++a) ue[a] = u[d[a]];
      } else {
        const auto d = element_dofs_heat(problem.nelx, problem.nely, elx, ely);
        for (int a = 0; a < 4; ++a) ue[a] = u[d[a]];
      }
      double s = 0.0;
      for (int a = 0; a < ls; ++a)
        for (int b = 0; b < ls; ++b) s += ue[a] * km[a * ls + b] * ue[b];
      energies[static_cast<size_t>(ely) * problem.nelx + elx] = std::max(0.0, s);
    }
  }
  return compliance_from_energies(x, material, energies);
}

}  // namespace topo::fem

#pragma once

// Finite-element analysis on a regular grid of unit square bilinear elements.
//
// Numbering follows the classic 88-line SIMP code: nodes are numbered
// column-major starting at the top-left corner, node = col * (nely + 1) + row,
// with row 0 at the top. Mechanical problems carry two dofs per node,
// interleaved as (2 * node) for x and (2 * node + 1) for y, y pointing up.
// Heat problems carry one dof (temperature) per node. Element densities are
// stored row-major, nely rows by nelx columns.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "topo/error.hpp"

namespace topo::fem {

enum class Physics { mechanical, heat };

std::string to_string(Physics physics);
Physics physics_from_string(const std::string& name);

struct Load {
  int dof = 0;
  double magnitude = 0.0;

  bool operator==(const Load&) const = default;
};

struct Problem {
  int nelx = 0;
  int nely = 0;
  Physics physics = Physics::mechanical;
  std::vector<int> fixed_dofs;
  std::vector<Load> loads;
  double volume_fraction = 0.5;

  int node_count() const { return (nelx + 1) * (nely + 1); }
  int dofs_per_node() const { return physics == Physics::mechanical ? 2 : 1; }
  int dof_count() const { return dofs_per_node() * node_count(); }
  int element_count() const { return nelx * nely; }

  // Throws invalid_parameter when a structural invariant is broken.
  void validate() const;

  bool operator==(const Problem&) const = default;
};

// Half MBB beam: symmetry line on the left edge, roller at the bottom-right
// corner, unit downward load at the top-left corner.
Problem mbb_beam(int nelx, int nely, double volume_fraction);

struct MaterialModel {
  double e0 = 1.0;
  double emin = 1e-9;
  double penal = 3.0;
  double nu = 0.3;

  void validate() const;

  // E(x) = Emin + x^p (E0 - Emin)
  double modulus(double density) const;
  double modulus_derivative(double density) const;
};

// Element densities (or binary masks), nely rows by nelx columns, row-major.
struct DensityField {
  int nely = 0;
  int nelx = 0;
  std::vector<double> values;

  DensityField() = default;
  DensityField(int rows, int cols, double fill = 0.0)
      : nely(rows), nelx(cols), values(static_cast<size_t>(rows) * cols, fill) {}

  double& operator()(int row, int col) { return values[static_cast<size_t>(row) * nelx + col]; }
  double operator()(int row, int col) const { return values[static_cast<size_t>(row) * nelx + col]; }
  size_t size() const { return values.size(); }
  double mean() const;

  bool operator==(const DensityField&) const = default;
};

using ElementStiffness = Eigen::Matrix<double, 8, 8>;
using ElementConductivity = Eigen::Matrix<double, 4, 4>;

// Plane-stress stiffness of a unit square with unit Young's modulus. Local
// dof order: bottom-left, bottom-right, top-right, top-left, (x, y) each.
ElementStiffness element_stiffness_quad(double nu);

// Unit-conductivity bilinear square, same node order.
ElementConductivity element_conductivity_quad();

// Global dofs of element (elx, ely) in the local order above.
std::array<int, 8> element_dofs_mechanical(int nelx, int nely, int elx, int ely);
std::array<int, 4> element_dofs_heat(int nelx, int nely, int elx, int ely);

// Throws ill_posed if the constraints leave a zero-energy mode or if every
// load acts on a constrained dof.
void check_well_posed(const Problem& problem);
bool is_well_posed(const Problem& problem);

// Reusable solver for repeated solves on one problem with changing densities.
// The sparsity pattern and the fill-reducing ordering are computed once.
class FeSystem {
 public:
  FeSystem(const Problem& problem, const MaterialModel& material);

  // Full-length solution vector (fixed dofs are zero).
  Eigen::VectorXd solve(const DensityField& x);

  // Element energies u_e^T k0 u_e for a given solution.
  std::vector<double> element_energies(const Eigen::VectorXd& u) const;

  const Problem& problem() const { return problem_; }
  const MaterialModel& material() const { return material_; }
  int free_dof_count() const { return static_cast<int>(free_dofs_.size()); }

  // Relative residual of the most recent solve on the free dofs.
  double last_residual() const { return last_residual_; }

 private:
  void assemble(const DensityField& x);

  Problem problem_;
  MaterialModel material_;
  int local_size_ = 0;
  std::vector<double> element_matrix_;  // local_size_^2, row-major
  std::vector<int> element_dofs_;       // element_count * local_size_
  std::vector<int> free_index_;         // global dof -> free index or -1
  std::vector<int> free_dofs_;
  std::vector<int> scatter_;            // element_count * local_size_^2, -1 if skipped
  Eigen::SparseMatrix<double> k_free_;  // lower triangle
  Eigen::VectorXd f_free_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
  double last_residual_ = 0.0;
};

// One-shot solve of K(x) U = F.
Eigen::VectorXd assemble_and_solve(const Problem& problem, const DensityField& x,
                                   const MaterialModel& material);

struct ComplianceResult {
  double compliance = 0.0;
  std::vector<double> sensitivity;  // dc/dx per element, all <= 0
};

ComplianceResult compliance_and_sensitivity(const Problem& problem, const DensityField& x,
                                            const MaterialModel& material,
                                            const Eigen::VectorXd& u);

// Combines element energies with the SIMP interpolation.
ComplianceResult compliance_from_energies(const DensityField& x, const MaterialModel& material,
                                          std::span<const double> energies);

}  // namespace topo::fem

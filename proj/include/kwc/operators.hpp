#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <memory>

#include "kwc/grid.hpp"

namespace kwc {

using SpMat = Eigen::SparseMatrix<double>;

/// Raised when a linear or nonlinear solve fails its residual contract.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Assembled P1 operators over a SpatialGrid, plus cached factorizations
/// used by the norm and dual-representation helpers. Immutable once built.
///
/// Conventions:
///  - M is the consistent mass matrix, K the (Neumann) stiffness matrix;
///  - lumped(j) = sum_k M(j,k) = integral of the j-th hat function;
///  - weighted mass matrices for nodal coefficients are lumped diagonals;
///  - weighted stiffness and convection use element-midpoint coefficients.
class DiscreteOperators {
 public:
  SpatialGrid grid;
  SpMat M;               // (w, phi_j)_H
  SpMat K;               // (grad w, grad phi_j)
  Eigen::VectorXd lumped;
  std::vector<Eigen::MatrixXd> grad_phi;  // per element: (dim+1) x dim

  /// diag(lumped_j * c_j) for a nodal coefficient c.
  SpMat weighted_mass(const ScalarField& c) const;

  /// (A grad w, grad phi_j) for an element-wise symmetric matrix field.
  SpMat weighted_stiffness(const MatrixField& A) const;

  /// C_w with (C_w z)_j = (w . grad z, phi_j)_H for an element-wise
  /// vector field w; its transpose realizes (p w, grad psi).
  SpMat convection(const VectorField& w) const;

  /// Element-wise gradient of a nodal field.
  VectorField gradient_of(const ScalarField& w) const;

  /// For an element-wise scalar c: out_j = integral of c * phi_j
  /// (exact for piecewise constants; used by lumped nonlinear terms).
  Eigen::VectorXd integrate_against_basis(const Eigen::VectorXd& c_elem) const;

  /// Lumped projection of an element-wise scalar to nodes:
  /// integrate_against_basis(c) ./ lumped.
  ScalarField nodal_average(const Eigen::VectorXd& c_elem) const;

  /// Solves (M+K) x = rhs (cached factorization; Riesz map V* -> V).
  Eigen::VectorXd solve_MK(const Eigen::VectorXd& rhs) const;

  /// Solves M x = rhs (cached factorization; H-representation of loads).
  Eigen::VectorXd solve_M(const Eigen::VectorXd& rhs) const;

 private:
  friend std::unique_ptr<DiscreteOperators> assemble_operators(const SpatialGrid&);
  std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> mk_solver_;
  std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> m_solver_;
};

std::unique_ptr<DiscreteOperators> assemble_operators(const SpatialGrid& grid);

/// Direct sparse solve A x = b with residual check
/// ||Ax-b||_inf <= 1e-10 * (1 + ||b||_inf); throws SolverError otherwise.
Eigen::VectorXd solve_sparse(const SpMat& A, const Eigen::VectorXd& b);

// -- spatial norms ---------------------------------------------------------

double norm_H(const DiscreteOperators& ops, const ScalarField& w);
double norm_V(const DiscreteOperators& ops, const ScalarField& w);

/// |grad w|_H for an element-wise gradient field.
double norm_grad(const DiscreteOperators& ops, const VectorField& g);

/// Dual norm of an assembled load vector f: sqrt(f^T (M+K)^{-1} f).
double norm_Vstar_load(const DiscreteOperators& ops, const Eigen::VectorXd& f);

/// Dual norm of an H-field w acting by (w, .)_H, i.e. load M w.
double norm_Vstar_field(const DiscreteOperators& ops, const ScalarField& w);

// -- time-aggregated norms -------------------------------------------------

/// Trajectory L2(0,T;H) norm, left-rectangle rule over nodes 0..n-1:
/// sqrt(tau * sum |w_i|_H^2). Used for costs, controls, and pairings.
double trajectory_norm_Hs(const DiscreteOperators& ops, const ScalarTrajectory& w);

/// Left-rectangle L2(0,T;H)^2-type inner product of two pairs is built
/// from this single-component pairing.
double trajectory_inner_Hs(const DiscreteOperators& ops,
                           const ScalarTrajectory& w1, const ScalarTrajectory& w2);

/// Step-sum L2(0,T;V*) norm of a forcing trajectory, right-rectangle
/// over steps 1..n: sqrt(tau * sum_{i>=1} |w_i|_{V*}^2). Used by the
/// stability and boundedness estimates, matching their discrete sums.
double step_norm_Vstar(const DiscreteOperators& ops, const ScalarTrajectory& w);

/// Step-sum L2(0,T;V) norm over steps 1..n (right rectangle).
double step_norm_V(const DiscreteOperators& ops, const ScalarTrajectory& w);

/// Right-rectangle L2(0,T;H) inner product over steps 1..n. This is the
/// pairing the marching scheme itself induces: step i consumes forcings
/// at node i, so transpose identities hold with this sum, not the
/// left-rectangle one.
double step_inner_Hs(const DiscreteOperators& ops,
                     const ScalarTrajectory& w1, const ScalarTrajectory& w2);

}  // namespace kwc

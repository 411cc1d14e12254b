#pragma once

#include "kwc/linear_pp.hpp"
#include "kwc/state.hpp"

namespace kwc {

// Verification-only helpers. These exist to cross-check the marching
// solvers and the adjoint pairing on tiny instances; nothing in the
// solver path may call them.

/// Dense monolithic space-time matrix of the time-discrete linear
/// system: unknowns [p_1, z_1, ..., p_n, z_n] step-major, block
/// lower-bidiagonal. Hard caps: <= 16 nodes, <= 8 steps (throws
/// ConfigError beyond). Returns the matrix and the right-hand side
/// carrying the initial data and forcings.
struct SpacetimeSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd rhs;
  int n_nodes = 0, n_steps = 0;
};

SpacetimeSystem assemble_spacetime(const DiscreteOperators& ops,
                                   const ProblemParams& prm, const Septuplet& s,
                                   const ScalarField& p0, const ScalarField& z0,
                                   const LinearForcing& f);

/// Central finite-difference directional derivative of the reduced cost
/// at (u, v) in direction (du, dv), with one Richardson halving:
/// fd(delta), fd(delta/2), the extrapolated value, and their spread.
struct FdGradient {
  double fd_coarse = 0, fd_fine = 0;
  double extrapolated = 0;
  double spread = 0;  // |fd_fine - fd_coarse|
};

FdGradient fd_gradient(const DiscreteOperators& ops, const StateInstance& inst,
                       const ScalarTrajectory& du, const ScalarTrajectory& dv,
                       double delta);

}  // namespace kwc

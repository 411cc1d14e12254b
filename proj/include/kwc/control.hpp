#pragma once

#include "kwc/linear_pp.hpp"
#include "kwc/state.hpp"

namespace kwc {

/// Quadratic tracking cost of an instance and its computed state:
///   J = M_eta/2 |eta - eta_ad|^2 + M_theta/2 |theta - theta_ad|^2
///     + M_u/2 |u|^2 + M_v/2 |v|^2,
/// all in the left-rectangle trajectory L2(0,T;H) norm.
double cost(const DiscreteOperators& ops, const StateInstance& inst,
            const StateTrajectory& st);

/// Coefficient septuplet of the state system linearized at a trajectory:
///   a = alpha0(eta), b = 0, c = alpha0'(eta) dt theta,
///   lambda = g'(eta) + alpha''(eta) gamma_eps(grad theta), xi = 0,
///   omega = alpha'(eta) grad gamma_eps(grad theta),
///   A = alpha(eta) hess gamma_eps(grad theta).
/// Time derivatives use backward differences (forward at t = 0); nodal
/// coefficients of element quantities use the lumped projection.
Septuplet build_linearized_septuplet(const DiscreteOperators& ops,
                                     const ProblemParams& prm,
                                     const NonlinearityBundle& bundle,
                                     const StateTrajectory& st);

/// Septuplet of the adjoint system after the s = T - t substitution:
/// with R[w](t) = w(T - t),
///   a = R[alpha0(eta)], b = R[-alpha0'(eta) dt eta], c = 0,
///   lambda = R[g'(eta) + alpha''(eta) gamma_eps(grad theta)],
///   xi = R[alpha0'(eta) dt theta],
///   omega = R[alpha'(eta) grad gamma_eps(grad theta)],
///   A = R[alpha(eta) hess gamma_eps(grad theta)].
Septuplet build_adjoint_septuplet(const DiscreteOperators& ops,
                                  const ProblemParams& prm,
                                  const NonlinearityBundle& bundle,
                                  const StateTrajectory& st);

/// Adjoint pair [p*, z*]: solves the reversed system with zero terminal
/// data and tracking-misfit forcings, returned in original time (so the
/// terminal values vanish identically).
LinearState solve_adjoint(const DiscreteOperators& ops, const StateInstance& inst,
                          const StateTrajectory& st);

/// Cost gradient at (u, v) via the adjoint:
///   g_u = L_u p* + M_u u,  g_v = L_v z* + M_v v.
void gateaux_gradient(const StateInstance& inst, const LinearState& adj,
                      ScalarTrajectory& g_u, ScalarTrajectory& g_v);

/// Directional derivative of the discrete cost at (u, v) along (du, dv),
/// evaluated through the adjoint. The penalty part uses the same
/// left-rectangle quadrature as the cost itself; the state-chain part
/// pairs the adjoint over steps 1..n because the march only consumes
/// controls there (node 0 has no state influence).
double cost_directional(const DiscreteOperators& ops, const StateInstance& inst,
                        const LinearState& adj, const ScalarTrajectory& du,
                        const ScalarTrajectory& dv);

/// Conjugacy identity between the adjoint and linearized solution maps:
/// pairs P*(f) with (h, k) against f with Pbar(h, k) and returns both
/// sides. Each side is summed over the nodes its own march consumes:
/// steps 1..n on the left, nodes 0..n-1 on the right.
struct ConjugacyResult {
  double lhs = 0, rhs = 0;
  double gap() const { return lhs - rhs; }
  double scale() const;
};

ConjugacyResult check_conjugacy(const DiscreteOperators& ops,
                                const StateInstance& inst, const StateTrajectory& st,
                                const ScalarTrajectory& f_u, const ScalarTrajectory& f_v,
                                const ScalarTrajectory& h, const ScalarTrajectory& k);

/// Projected-gradient options (defaults are the pinned ones).
struct OcpOptions {
  double tol = 1e-6;
  int max_iters = 500;
  double armijo_init = 1.0;
  double armijo_shrink = 0.5;
  double armijo_c1 = 1e-4;
  int max_halvings = 40;
};

/// One iterate row of the descent loop.
struct OcpIterate {
  int iter = 0;
  double J = 0;
  double residual_u = 0, residual_v = 0;
  double step = 0;
};

struct OcpReport {
  ScalarTrajectory u, v;
  StateTrajectory state;
  LinearState adjoint;
  std::vector<OcpIterate> history;
  bool converged = false;
  std::string failure;   // empty on success; e.g. line-search failure record
  double final_cost = 0;
};

/// Projected gradient descent with Armijo backtracking from
/// u0 = proj_box(0), v0 = 0. The cost is nonincreasing across accepted
/// steps; stops when |u - proj(u - g_u)| + |g_v| <= tol (trajectory
/// norms). Channels with L = M = 0 stay frozen at their initial values.
OcpReport solve_ocp(const DiscreteOperators& ops, const StateInstance& inst,
                    const BoxConstraint& box, const OcpOptions& opts = {});

/// First-order optimality residuals at (u, v) with adjoint [p*, z*]:
///  - fixed_point: |u - proj_box(-(L_u/M_u) p*)| (0 when the u-channel
///    is absent);
///  - vstat: |L_v z* + M_v v|;
///  - vi_min: min over n_samples seeded random h in the box of
///    (L_u p* + M_u u, h - u); nonnegative at a solution.
struct OptimalityResiduals {
  double fixed_point = 0;
  double vstat = 0;
  double vi_min = 0;
};

OptimalityResiduals optimality_residuals(const DiscreteOperators& ops,
                                         const StateInstance& inst,
                                         const BoxConstraint& box,
                                         const ScalarTrajectory& u,
                                         const ScalarTrajectory& v,
                                         const LinearState& adj,
                                         unsigned seed = 20260822,
                                         int n_samples = 100);

/// Per-level record of the vanishing-regularization sweep.
struct EpsLevel {
  double eps = 0;
  OcpReport ocp;
  double cost_value = 0;
  double sup_flux_norm = 0;       // sup over elements/nodes of |varpi|
  double max_dir_error = 0;       // max of |varpi - grad/|grad|| where |grad| >= dir_floor
  double dir_floor = 0.1;
  double control_dist_prev = 0;   // |u - u_prev| + |v - v_prev| (0 at first level)
  double cost_gap_prev = 0;       // |J - J_prev| (0 at first level)
  ScalarTrajectory xi_star;       // nodal dt theta* x z*
  std::vector<Eigen::VectorXd> sigma_star;  // element-wise varpi . grad z* per node
};

/// Warm-started sweep over a decreasing eps list; each level reuses the
/// previous level's controls as the initial guess.
std::vector<EpsLevel> epsilon_continuation(const DiscreteOperators& ops,
                                           StateInstance inst,
                                           const BoxConstraint& box,
                                           const std::vector<double>& eps_list,
                                           const OcpOptions& opts = {});

}  // namespace kwc

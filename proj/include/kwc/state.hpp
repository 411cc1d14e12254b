#pragma once

#include "kwc/box.hpp"
#include "kwc/bundle.hpp"
#include "kwc/energy.hpp"
#include "kwc/params.hpp"

namespace kwc {

/// A fully specified instance of the controlled state system.
struct StateInstance {
  TimeGrid tg;
  ProblemParams params;
  NonlinearityBundle bundle;
  ScalarField eta0, theta0;
  ScalarField eta_ad, theta_ad;  // target fields (constant in time)
  ScalarTrajectory u, v;         // controls at time nodes
};

/// Computed state trajectory with per-step solver diagnostics.
struct StateTrajectory {
  ScalarTrajectory eta, theta;
  std::vector<int> newton_iters_eta, newton_iters_theta;
  std::vector<double> energy;  // F_eps at each node, length n+1
};

/// One decoupled implicit step: first the eta-equation by damped Newton
/// (theta lagged at the previous node), then the theta-step as a convex
/// minimization, also by damped Newton with the kernel Hessian. Newton
/// stops at residual |r|_{V*} <= 1e-10 and throws SolverError after 50
/// iterations (or 30 failed halvings) without convergence. Requires
/// eps > 0 (std::invalid_argument otherwise).
void step_state(const DiscreteOperators& ops, const ProblemParams& prm,
                const NonlinearityBundle& bundle, double tau,
                const ScalarField& eta_prev, const ScalarField& theta_prev,
                const ScalarField& u_i, const ScalarField& v_i,
                ScalarField& eta_out, ScalarField& theta_out,
                int* iters_eta = nullptr, int* iters_theta = nullptr);

/// Marches the instance over its time grid, recording the energy trace.
StateTrajectory solve_state(const DiscreteOperators& ops, const StateInstance& inst);

/// Energy at every node of a computed trajectory (recomputed on demand).
std::vector<double> energy_trace(const DiscreteOperators& ops,
                                 const ProblemParams& prm,
                                 const NonlinearityBundle& bundle,
                                 const StateTrajectory& st);

}  // namespace kwc

#pragma once

#include <cmath>

#include "kwc/bundle.hpp"
#include "kwc/operators.hpp"
#include "kwc/septuplet.hpp"
#include "kwc/state.hpp"

namespace kwtest {

using namespace kwc;

constexpr double kPi = 3.14159265358979323846;

// Small copy of the reference setup on a 1D unit-interval grid: default
// bundle, embedding constant pinned at 1 so the adjoint-side septuplets
// admit the coarse steps these tests run at.
inline StateInstance reference_instance(const DiscreteOperators& ops, double T,
                                        double tau, double eps,
                                        bool with_targets) {
  StateInstance inst;
  inst.tg = make_time_grid(T, tau);
  inst.params = ProblemParams{};
  inst.params.eps = eps;
  inst.params.C_emb = 1.0;
  inst.bundle = default_bundle();
  const int nn = ops.grid.n_nodes();
  inst.eta0.resize(nn);
  inst.theta0.resize(nn);
  for (int j = 0; j < nn; ++j) {
    const double x = ops.grid.nodes(j, 0);
    inst.eta0(j) = 0.5 + 0.25 * std::sin(2.0 * kPi * x);
    inst.theta0(j) = x * (1.0 - x);
  }
  const ScalarField zero = ScalarField::Zero(nn);
  inst.u = constant_trajectory(inst.tg, zero);
  inst.v = constant_trajectory(inst.tg, zero);
  inst.eta_ad = zero;
  inst.theta_ad = zero;
  if (with_targets) {
    const StateTrajectory un = solve_state(ops, inst);
    inst.eta_ad = un.eta[inst.tg.n];
    inst.theta_ad = un.theta[inst.tg.n];
  }
  return inst;
}

// Septuplet whose seven entries are constant in time and space
// (isotropic A_val * I; a constant a has delta_a = a).
inline Septuplet constant_septuplet(const DiscreteOperators& ops,
                                    const TimeGrid& tg, double a_val,
                                    double b_val, double c_val,
                                    double lambda_val, double xi_val,
                                    double omega_val, double A_val) {
  const int nn = ops.grid.n_nodes(), ne = ops.grid.n_elems(), d = ops.grid.dim;
  Septuplet s;
  s.delta_a = a_val;
  auto fill = [&](ScalarTrajectory& w, double v) {
    w.time = tg;
    w.vals.assign(static_cast<size_t>(tg.n) + 1, ScalarField::Constant(nn, v));
  };
  fill(s.a, a_val);
  fill(s.b, b_val);
  fill(s.c, c_val);
  fill(s.lambda, lambda_val);
  fill(s.xi, xi_val);
  s.omega.time = tg;
  s.omega.vals.assign(static_cast<size_t>(tg.n) + 1,
                      Eigen::MatrixXd::Constant(ne, d, omega_val));
  s.A.time = tg;
  MatrixField Af(static_cast<size_t>(ne));
  for (int e = 0; e < ne; ++e)
    Af[static_cast<size_t>(e)] = A_val * Eigen::MatrixXd::Identity(d, d);
  s.A.vals.assign(static_cast<size_t>(tg.n) + 1, Af);
  validate_septuplet(s, ops);
  return s;
}

}  // namespace kwtest

#include "kwc/state.hpp"

#include <cmath>

#include "kwc/kernel.hpp"

namespace kwc {

namespace {

// Damped Newton on an assembled residual; x is updated in place.
// residual(x) fills r (load vector) and, when J != nullptr, the Jacobian.
template <class ResidualFn>
int damped_newton(const DiscreteOperators& ops, ResidualFn&& residual,
                  Eigen::VectorXd& x, const char* what) {
  constexpr int kMaxIter = 50, kMaxHalvings = 30;
  constexpr double kTol = 1e-10;
  Eigen::VectorXd r;
  SpMat J;
  residual(x, r, &J);
  double rn = norm_Vstar_load(ops, r);
  for (int it = 0; it < kMaxIter; ++it) {
    if (rn <= kTol) return it;
    const Eigen::VectorXd dx = solve_sparse(J, r);
    double s = 1.0;
    Eigen::VectorXd x_try;
    Eigen::VectorXd r_try;
    SpMat J_try;
    int halvings = 0;
    for (;; ++halvings) {
      x_try = x - s * dx;
      residual(x_try, r_try, &J_try);
      const double rn_try = norm_Vstar_load(ops, r_try);
      if (rn_try < rn || rn_try <= kTol) {
        x = x_try;
        r.swap(r_try);
        J.swap(J_try);
        rn = rn_try;
        break;
      }
      if (halvings >= kMaxHalvings)
        throw SolverError(std::string(what) +
                          ": Newton line search stalled at residual " +
                          std::to_string(rn));
      s *= 0.5;
    }
  }
  if (rn <= kTol) return kMaxIter;
  throw SolverError(std::string(what) + ": Newton failed to reach 1e-10 in 50 " +
                    "iterations (residual " + std::to_string(rn) + ")");
}

}  // namespace

void step_state(const DiscreteOperators& ops, const ProblemParams& prm,
                const NonlinearityBundle& bundle, double tau,
                const ScalarField& eta_prev, const ScalarField& theta_prev,
                const ScalarField& u_i, const ScalarField& v_i,
                ScalarField& eta_out, ScalarField& theta_out,
                int* iters_eta, int* iters_theta) {
  if (!(prm.eps > 0))
    throw std::invalid_argument("step_state: requires eps > 0");
  const double mu2 = prm.mu * prm.mu, nu2 = prm.nu * prm.nu;
  const int nn = ops.grid.n_nodes(), ne = ops.grid.n_elems(), d = ops.grid.dim;
  const int nv = d + 1;

  // gamma_eps(grad theta_prev) integrated against the hat functions
  const VectorField gth_prev = ops.gradient_of(theta_prev);
  Eigen::VectorXd gamma_elem(ne);
  for (int e = 0; e < ne; ++e)
    gamma_elem(e) = gamma_eps(prm.eps, Eigen::VectorXd(gth_prev.row(e).transpose()));
  const Eigen::VectorXd gamma_tilde = ops.integrate_against_basis(gamma_elem);

  const SpMat lhs_eta_lin = SpMat((1.0 / tau) * (ops.M + mu2 * ops.K) + ops.K);
  const Eigen::VectorXd rhs_eta =
      (1.0 / tau) * ((ops.M + mu2 * ops.K) * eta_prev) + prm.L_u * (ops.M * u_i);

  auto eta_residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, SpMat* J) {
    Eigen::VectorXd nl(nn), dnl(nn);
    for (int j = 0; j < nn; ++j) {
      nl(j) = ops.lumped(j) * bundle.g(x(j)) + bundle.alphap(x(j)) * gamma_tilde(j);
      dnl(j) = ops.lumped(j) * bundle.gp(x(j)) + bundle.alphapp(x(j)) * gamma_tilde(j);
    }
    r = lhs_eta_lin * x + nl - rhs_eta;
    if (J) {
      std::vector<Eigen::Triplet<double>> t;
      t.reserve(nn);
      for (int j = 0; j < nn; ++j) t.emplace_back(j, j, dnl(j));
      SpMat D(nn, nn);
      D.setFromTriplets(t.begin(), t.end());
      *J = lhs_eta_lin + D;
    }
  };
  eta_out = eta_prev;
  const int it_eta = damped_newton(ops, eta_residual, eta_out, "eta-step");
  if (iters_eta) *iters_eta = it_eta;

  // theta-step: convex minimization with eta_out frozen
  Eigen::VectorXd alpha0_lump(nn);
  for (int j = 0; j < nn; ++j)
    alpha0_lump(j) = ops.lumped(j) * bundle.alpha0(eta_out(j));
  Eigen::VectorXd alpha_mid(ne);
  for (int e = 0; e < ne; ++e) {
    double em = 0;
    for (int i = 0; i < nv; ++i) em += eta_out(ops.grid.elems(e, i));
    alpha_mid(e) = bundle.alpha(em / nv);
  }
  SpMat D0(nn, nn);
  {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(nn);
    for (int j = 0; j < nn; ++j) t.emplace_back(j, j, alpha0_lump(j) / tau);
    D0.setFromTriplets(t.begin(), t.end());
  }
  const SpMat lhs_th_lin = SpMat(D0 + (nu2 / tau) * ops.K);
  const Eigen::VectorXd rhs_th = lhs_th_lin * theta_prev + prm.L_v * (ops.M * v_i);

  auto theta_residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, SpMat* J) {
    const VectorField gx = ops.gradient_of(x);
    Eigen::VectorXd flux = Eigen::VectorXd::Zero(nn);
    MatrixField Ahess(static_cast<size_t>(ne));
    for (int e = 0; e < ne; ++e) {
      const Eigen::VectorXd ge = gx.row(e).transpose();
      const Eigen::VectorXd w = alpha_mid(e) * grad_gamma_eps(prm.eps, ge);
      const double me = ops.grid.elem_measure(e);
      for (int i = 0; i < nv; ++i)
        flux(ops.grid.elems(e, i)) += me * w.dot(ops.grad_phi[e].row(i));
      if (J) Ahess[static_cast<size_t>(e)] = alpha_mid(e) * hess_gamma_eps(prm.eps, ge);
    }
    r = lhs_th_lin * x + flux - rhs_th;
    if (J) *J = lhs_th_lin + ops.weighted_stiffness(Ahess);
  };
  theta_out = theta_prev;
  const int it_th = damped_newton(ops, theta_residual, theta_out, "theta-step");
  if (iters_theta) *iters_theta = it_th;
}

StateTrajectory solve_state(const DiscreteOperators& ops, const StateInstance& inst) {
  inst.params.validate();
  if (!(inst.params.eps > 0))
    throw std::invalid_argument("solve_state: requires eps > 0");
  const TimeGrid tg = inst.tg;
  StateTrajectory st;
  st.eta.time = st.theta.time = tg;
  st.eta.vals.assign(static_cast<size_t>(tg.n) + 1, inst.eta0);
  st.theta.vals.assign(static_cast<size_t>(tg.n) + 1, inst.theta0);
  st.newton_iters_eta.assign(static_cast<size_t>(tg.n) + 1, 0);
  st.newton_iters_theta.assign(static_cast<size_t>(tg.n) + 1, 0);
  st.energy.assign(static_cast<size_t>(tg.n) + 1, 0.0);
  st.energy[0] = kwc_energy(ops, inst.params.eps, inst.bundle, inst.eta0, inst.theta0);
  for (int i = 1; i <= tg.n; ++i) {
    step_state(ops, inst.params, inst.bundle, tg.tau, st.eta[i - 1], st.theta[i - 1],
               inst.u[i], inst.v[i], st.eta[i], st.theta[i],
               &st.newton_iters_eta[static_cast<size_t>(i)],
               &st.newton_iters_theta[static_cast<size_t>(i)]);
    st.energy[static_cast<size_t>(i)] =
        kwc_energy(ops, inst.params.eps, inst.bundle, st.eta[i], st.theta[i]);
  }
  return st;
}

std::vector<double> energy_trace(const DiscreteOperators& ops,
                                 const ProblemParams& prm,
                                 const NonlinearityBundle& bundle,
                                 const StateTrajectory& st) {
  std::vector<double> out(static_cast<size_t>(st.eta.steps()) + 1);
  for (int i = 0; i <= st.eta.steps(); ++i)
    out[static_cast<size_t>(i)] = kwc_energy(ops, prm.eps, bundle, st.eta[i], st.theta[i]);
  return out;
}

}  // namespace kwc

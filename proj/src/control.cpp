#include "kwc/control.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "kwc/kernel.hpp"

namespace kwc {

namespace {

double sq(double x) { return x * x; }

// Backward-difference time derivative at the nodes, forward at t = 0.
ScalarTrajectory dt_nodes(const ScalarTrajectory& w) {
  ScalarTrajectory out = w;
  const double tau = w.time.tau;
  const int n = w.steps();
  for (int i = n; i >= 1; --i) out[i] = (w[i] - w[i - 1]) / tau;
  out[0] = (w[1] - w[0]) / tau;
  return out;
}

}  // namespace

double cost(const DiscreteOperators& ops, const StateInstance& inst,
            const StateTrajectory& st) {
  const ProblemParams& p = inst.params;
  auto misfit_sq = [&](const ScalarTrajectory& w, const ScalarField& target) {
    double s = 0;
    for (int i = 0; i < w.steps(); ++i)
      s += sq(norm_H(ops, ScalarField(w[i] - target)));
    return w.time.tau * s;
  };
  return 0.5 * p.M_eta * misfit_sq(st.eta, inst.eta_ad) +
         0.5 * p.M_theta * misfit_sq(st.theta, inst.theta_ad) +
         0.5 * p.M_u * sq(trajectory_norm_Hs(ops, inst.u)) +
         0.5 * p.M_v * sq(trajectory_norm_Hs(ops, inst.v));
}

Septuplet build_linearized_septuplet(const DiscreteOperators& ops,
                                     const ProblemParams& prm,
                                     const NonlinearityBundle& bundle,
                                     const StateTrajectory& st) {
  const TimeGrid tg = st.eta.time;
  const int nn = ops.grid.n_nodes(), ne = ops.grid.n_elems(), d = ops.grid.dim;
  const int nv = d + 1;
  const ScalarTrajectory dth = dt_nodes(st.theta);

  Septuplet s;
  s.delta_a = bundle.delta_star;
  for (ScalarTrajectory* tr : {&s.a, &s.b, &s.c, &s.lambda, &s.xi}) {
    tr->time = tg;
    tr->vals.assign(static_cast<size_t>(tg.n) + 1, ScalarField::Zero(nn));
  }
  s.omega.time = s.A.time = tg;
  s.omega.vals.assign(static_cast<size_t>(tg.n) + 1, VectorField::Zero(ne, d));
  s.A.vals.assign(static_cast<size_t>(tg.n) + 1,
                  MatrixField(static_cast<size_t>(ne), Eigen::MatrixXd::Zero(d, d)));

  for (int i = 0; i <= tg.n; ++i) {
    const ScalarField& eta = st.eta[i];
    const VectorField gth = ops.gradient_of(st.theta[i]);
    Eigen::VectorXd gamma_elem(ne);
    for (int e = 0; e < ne; ++e) {
      const Eigen::VectorXd ge = gth.row(e).transpose();
      gamma_elem(e) = gamma_eps(prm.eps, ge);
      double em = 0;
      for (int k = 0; k < nv; ++k) em += eta(ops.grid.elems(e, k));
      em /= nv;
      s.omega[i].row(e) = bundle.alphap(em) * grad_gamma_eps(prm.eps, ge).transpose();
      s.A[i][static_cast<size_t>(e)] = bundle.alpha(em) * hess_gamma_eps(prm.eps, ge);
    }
    const ScalarField gamma_nodal = ops.nodal_average(gamma_elem);
    for (int j = 0; j < nn; ++j) {
      s.a[i](j) = bundle.alpha0(eta(j));
      s.c[i](j) = bundle.alpha0p(eta(j)) * dth[i](j);
      s.lambda[i](j) = bundle.gp(eta(j)) + bundle.alphapp(eta(j)) * gamma_nodal(j);
    }
  }
  validate_septuplet(s, ops);
  return s;
}

Septuplet build_adjoint_septuplet(const DiscreteOperators& ops,
                                  const ProblemParams& prm,
                                  const NonlinearityBundle& bundle,
                                  const StateTrajectory& st) {
  const TimeGrid tg = st.eta.time;
  const int nn = ops.grid.n_nodes();
  const ScalarTrajectory deta = dt_nodes(st.eta);
  const ScalarTrajectory dth = dt_nodes(st.theta);

  // start from the linearized coefficients, then swap the couplings
  // (c moves to xi), add the eta-velocity damping b, and reverse time
  Septuplet lin = build_linearized_septuplet(ops, prm, bundle, st);
  Septuplet s;
  s.delta_a = lin.delta_a;
  s.a = time_reverse(lin.a);
  s.lambda = time_reverse(lin.lambda);
  s.omega = time_reverse(lin.omega);
  s.A = time_reverse(lin.A);
  s.xi = time_reverse(lin.c);  // alpha0'(eta) dt theta
  s.c = lin.b;                 // zero
  s.b.time = tg;
  s.b.vals.assign(static_cast<size_t>(tg.n) + 1, ScalarField::Zero(nn));
  for (int i = 0; i <= tg.n; ++i) {
    const int r = tg.n - i;
    for (int j = 0; j < nn; ++j)
      s.b[i](j) = -bundle.alpha0p(st.eta[r](j)) * deta[r](j);
  }
  validate_septuplet(s, ops);
  return s;
}

LinearState solve_adjoint(const DiscreteOperators& ops, const StateInstance& inst,
                          const StateTrajectory& st) {
  const TimeGrid tg = st.eta.time;
  const int nn = ops.grid.n_nodes();
  const Septuplet adj = build_adjoint_septuplet(ops, inst.params, inst.bundle, st);

  LinearForcing f;
  f.h.time = f.k.time = tg;
  f.h.vals.assign(static_cast<size_t>(tg.n) + 1, ScalarField::Zero(nn));
  f.k.vals.assign(static_cast<size_t>(tg.n) + 1, ScalarField::Zero(nn));
  for (int i = 0; i <= tg.n; ++i) {
    const int r = tg.n - i;
    f.h[i] = inst.params.M_eta * (st.eta[r] - inst.eta_ad);
    f.k[i] = inst.params.M_theta * (st.theta[r] - inst.theta_ad);
  }
  const ScalarField zero = ScalarField::Zero(nn);
  LinearState rev = solve_linear(ops, inst.params, adj, zero, zero, f);
  LinearState out;
  out.p = time_reverse(rev.p);
  out.z = time_reverse(rev.z);
  return out;
}

void gateaux_gradient(const StateInstance& inst, const LinearState& adj,
                      ScalarTrajectory& g_u, ScalarTrajectory& g_v) {
  const ProblemParams& p = inst.params;
  g_u = inst.u;
  g_v = inst.v;
  for (int i = 0; i <= inst.u.steps(); ++i) {
    g_u[i] = p.L_u * adj.p[i] + p.M_u * inst.u[i];
    g_v[i] = p.L_v * adj.z[i] + p.M_v * inst.v[i];
  }
}

double cost_directional(const DiscreteOperators& ops, const StateInstance& inst,
                        const LinearState& adj, const ScalarTrajectory& du,
                        const ScalarTrajectory& dv) {
  const ProblemParams& p = inst.params;
  const double penalty = p.M_u * trajectory_inner_Hs(ops, inst.u, du) +
                         p.M_v * trajectory_inner_Hs(ops, inst.v, dv);
  const double chain = p.L_u * step_inner_Hs(ops, adj.p, du) +
                       p.L_v * step_inner_Hs(ops, adj.z, dv);
  return penalty + chain;
}

double ConjugacyResult::scale() const {
  return std::max(1e-300, std::abs(lhs) + std::abs(rhs));
}

ConjugacyResult check_conjugacy(const DiscreteOperators& ops,
                                const StateInstance& inst, const StateTrajectory& st,
                                const ScalarTrajectory& f_u, const ScalarTrajectory& f_v,
                                const ScalarTrajectory& h, const ScalarTrajectory& k) {
  const int nn = ops.grid.n_nodes();
  const ScalarField zero = ScalarField::Zero(nn);

  // adjoint side: P*(f) = R . Padj . R applied to (f_u, f_v)
  const Septuplet adj = build_adjoint_septuplet(ops, inst.params, inst.bundle, st);
  LinearForcing fr;
  fr.h = time_reverse(f_u);
  fr.k = time_reverse(f_v);
  LinearState rev = solve_linear(ops, inst.params, adj, zero, zero, fr);
  const ScalarTrajectory pstar = time_reverse(rev.p);
  const ScalarTrajectory zstar = time_reverse(rev.z);

  // linearized side: Pbar(h, k), zero initial data
  const Septuplet lin = build_linearized_septuplet(ops, inst.params, inst.bundle, st);
  LinearForcing fl;
  fl.h = h;
  fl.k = k;
  const LinearState linst = solve_linear(ops, inst.params, lin, zero, zero, fl);

  ConjugacyResult out;
  // The two sides use staggered quadratures on purpose: the forward march
  // consumes (h, k) at steps 1..n, while the reversed adjoint march
  // consumes the reversal of (f_u, f_v), which reads nodes 0..n-1. Pairing
  // each side over the nodes its march actually touches leaves only the
  // coefficient-treatment error in the gap. The left-rectangle side loses
  // nothing at i = 0 because the linearized solve starts from zero.
  out.lhs = step_inner_Hs(ops, pstar, h) + step_inner_Hs(ops, zstar, k);
  out.rhs = trajectory_inner_Hs(ops, f_u, linst.p) +
            trajectory_inner_Hs(ops, f_v, linst.z);
  return out;
}

namespace {

double fixed_point_residual(const DiscreteOperators& ops, const StateInstance& inst,
                            const BoxConstraint& box, const ScalarTrajectory& u,
                            const ScalarTrajectory& g_u, const ScalarTrajectory& g_v,
                            bool u_active, bool v_active) {
  double ru = 0, rv = 0;
  if (u_active) {
    ScalarTrajectory shifted = u;
    for (int i = 0; i <= u.steps(); ++i) shifted[i] = u[i] - g_u[i];
    const ScalarTrajectory proj = project_box(box, shifted);
    ScalarTrajectory diff = u;
    for (int i = 0; i <= u.steps(); ++i) diff[i] = u[i] - proj[i];
    ru = trajectory_norm_Hs(ops, diff);
  }
  if (v_active) rv = trajectory_norm_Hs(ops, g_v);
  (void)inst;
  return ru + rv;
}

}  // namespace

OcpReport solve_ocp(const DiscreteOperators& ops, const StateInstance& inst,
                    const BoxConstraint& box, const OcpOptions& opts) {
  const TimeGrid tg = inst.tg;
  const int nn = ops.grid.n_nodes();
  const bool u_active = inst.params.L_u > 0 || inst.params.M_u > 0;
  const bool v_active = inst.params.L_v > 0 || inst.params.M_v > 0;

  OcpReport rep;
  StateInstance cur = inst;
  if (cur.u.vals.empty()) {
    cur.u = constant_trajectory<ScalarField>(tg, ScalarField::Zero(nn));
    cur.v = constant_trajectory<ScalarField>(tg, ScalarField::Zero(nn));
  }
  cur.u = project_box(box, cur.u);

  StateTrajectory st = solve_state(ops, cur);
  double J = cost(ops, cur, st);

  for (int it = 0; it < opts.max_iters; ++it) {
    const LinearState adj = solve_adjoint(ops, cur, st);
    ScalarTrajectory g_u, g_v;
    gateaux_gradient(cur, adj, g_u, g_v);
    const double res_u =
        fixed_point_residual(ops, cur, box, cur.u, g_u, g_v, u_active, false);
    const double res_v =
        fixed_point_residual(ops, cur, box, cur.u, g_u, g_v, false, v_active);
    rep.history.push_back({it, J, res_u, res_v, 0.0});
    rep.adjoint = adj;
    if (res_u + res_v <= opts.tol) {
      rep.converged = true;
      break;
    }

    double s = opts.armijo_init;
    bool accepted = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving) {
      StateInstance trial = cur;
      double decrease = 0;  // (g_u, u - u_trial) + (g_v, v - v_trial)
      if (u_active) {
        ScalarTrajectory shifted = cur.u;
        for (int i = 0; i <= tg.n; ++i) shifted[i] = cur.u[i] - s * g_u[i];
        trial.u = project_box(box, shifted);
        ScalarTrajectory diff = cur.u;
        for (int i = 0; i <= tg.n; ++i) diff[i] = cur.u[i] - trial.u[i];
        decrease += trajectory_inner_Hs(ops, g_u, diff);
      }
      if (v_active) {
        for (int i = 0; i <= tg.n; ++i) trial.v[i] = cur.v[i] - s * g_v[i];
        decrease += s * sq(trajectory_norm_Hs(ops, g_v));
      }
      const StateTrajectory st_try = solve_state(ops, trial);
      const double J_try = cost(ops, trial, st_try);
      if (J_try <= J - opts.armijo_c1 * decrease) {
        cur = trial;
        st = st_try;
        J = J_try;
        rep.history.back().step = s;
        accepted = true;
        break;
      }
      s *= opts.armijo_shrink;
    }
    if (!accepted) {
      rep.failure = "line-search failure after " + std::to_string(opts.max_halvings) +
                    " halvings; |g_u| = " +
                    std::to_string(trajectory_norm_Hs(ops, g_u)) + ", |g_v| = " +
                    std::to_string(trajectory_norm_Hs(ops, g_v));
      break;
    }
  }
  if (!rep.converged && rep.failure.empty() &&
      static_cast<int>(rep.history.size()) >= opts.max_iters)
    rep.failure = "not converged within " + std::to_string(opts.max_iters) +
                  " iterations";
  rep.u = cur.u;
  rep.v = cur.v;
  rep.state = st;
  rep.final_cost = J;
  if (rep.history.empty() || rep.converged == false) {
    // make sure the adjoint matches the returned controls
    StateInstance fin = cur;
    rep.adjoint = solve_adjoint(ops, fin, st);
  }
  return rep;
}

OptimalityResiduals optimality_residuals(const DiscreteOperators& ops,
                                         const StateInstance& inst,
                                         const BoxConstraint& box,
                                         const ScalarTrajectory& u,
                                         const ScalarTrajectory& v,
                                         const LinearState& adj,
                                         unsigned seed, int n_samples) {
  const ProblemParams& p = inst.params;
  OptimalityResiduals out;
  const TimeGrid tg = u.time;

  if (p.M_u > 0) {
    ScalarTrajectory target = u;
    for (int i = 0; i <= tg.n; ++i) target[i] = -(p.L_u / p.M_u) * adj.p[i];
    const ScalarTrajectory proj = project_box(box, target);
    ScalarTrajectory diff = u;
    for (int i = 0; i <= tg.n; ++i) diff[i] = u[i] - proj[i];
    out.fixed_point = trajectory_norm_Hs(ops, diff);
  }

  {
    ScalarTrajectory r = v;
    for (int i = 0; i <= tg.n; ++i) r[i] = p.L_v * adj.z[i] + p.M_v * v[i];
    out.vstat = trajectory_norm_Hs(ops, r);
  }

  // variational-inequality slack over seeded random box elements
  ScalarTrajectory gu = u;
  for (int i = 0; i <= tg.n; ++i) gu[i] = p.L_u * adj.p[i] + p.M_u * u[i];
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double vi_min = std::numeric_limits<double>::infinity();
  for (int sdx = 0; sdx < n_samples; ++sdx) {
    ScalarTrajectory h = u;
    for (int i = 0; i <= tg.n; ++i)
      for (int j = 0; j < h[i].size(); ++j) {
        const double lo = box.lower[i](j), hi = box.upper[i](j);
        h[i](j) = lo + (hi - lo) * unit(rng);
      }
    ScalarTrajectory diff = u;
    for (int i = 0; i <= tg.n; ++i) diff[i] = h[i] - u[i];
    vi_min = std::min(vi_min, trajectory_inner_Hs(ops, gu, diff));
  }
  out.vi_min = n_samples > 0 ? vi_min : 0.0;
  return out;
}

std::vector<EpsLevel> epsilon_continuation(const DiscreteOperators& ops,
                                           StateInstance inst,
                                           const BoxConstraint& box,
                                           const std::vector<double>& eps_list,
                                           const OcpOptions& opts) {
  std::vector<EpsLevel> levels;
  const TimeGrid tg = inst.tg;
  const int nn = ops.grid.n_nodes(), ne = ops.grid.n_elems();
  for (double eps : eps_list) {
    inst.params.eps = eps;
    OcpReport rep = solve_ocp(ops, inst, box, opts);

    EpsLevel lvl;
    lvl.eps = eps;
    lvl.cost_value = rep.final_cost;

    // flux varpi = grad gamma_eps(grad theta*) and its limit diagnostics
    double sup_flux = 0, max_dir_err = 0;
    lvl.sigma_star.assign(static_cast<size_t>(tg.n) + 1, Eigen::VectorXd::Zero(ne));
    for (int i = 0; i <= tg.n; ++i) {
      const VectorField gth = ops.gradient_of(rep.state.theta[i]);
      const VectorField gz = ops.gradient_of(rep.adjoint.z[i]);
      for (int e = 0; e < ne; ++e) {
        const Eigen::VectorXd ge = gth.row(e).transpose();
        const Eigen::VectorXd w = grad_gamma_eps(eps, ge);
        sup_flux = std::max(sup_flux, w.norm());
        const double r = ge.norm();
        if (r >= lvl.dir_floor)
          max_dir_err = std::max(max_dir_err, (w - ge / r).norm());
        lvl.sigma_star[static_cast<size_t>(i)](e) = w.dot(gz.row(e).transpose());
      }
    }
    lvl.sup_flux_norm = sup_flux;
    lvl.max_dir_error = max_dir_err;

    // xi* = dt theta* x z* at the nodes
    const ScalarTrajectory dth = dt_nodes(rep.state.theta);
    lvl.xi_star.time = tg;
    lvl.xi_star.vals.assign(static_cast<size_t>(tg.n) + 1, ScalarField::Zero(nn));
    for (int i = 0; i <= tg.n; ++i)
      lvl.xi_star[i] = dth[i].cwiseProduct(rep.adjoint.z[i]);

    if (!levels.empty()) {
      const EpsLevel& prev = levels.back();
      ScalarTrajectory du = rep.u, dv = rep.v;
      for (int i = 0; i <= tg.n; ++i) {
        du[i] = rep.u[i] - prev.ocp.u[i];
        dv[i] = rep.v[i] - prev.ocp.v[i];
      }
      lvl.control_dist_prev =
          trajectory_norm_Hs(ops, du) + trajectory_norm_Hs(ops, dv);
      lvl.cost_gap_prev = std::abs(rep.final_cost - prev.cost_value);
    }

    // warm start the next level from this solution
    inst.u = rep.u;
    inst.v = rep.v;
    lvl.ocp = std::move(rep);
    levels.push_back(std::move(lvl));
  }
  return levels;
}

}  // namespace kwc

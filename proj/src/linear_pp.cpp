#include "kwc/linear_pp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kwc {

namespace {

// Builds the 2x2 block step matrix and the two RHS loads for step i.
struct StepSystem {
  SpMat A;           // 2n x 2n block matrix
  Eigen::VectorXd rhs;
};

SpMat hcat2x2(const SpMat& TL, const SpMat& TR, const SpMat& BL, const SpMat& BR) {
  const int n = static_cast<int>(TL.rows());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(TL.nonZeros() + TR.nonZeros() + BL.nonZeros() + BR.nonZeros());
  auto add = [&](const SpMat& S, int ro, int co) {
    for (int k = 0; k < S.outerSize(); ++k)
      for (SpMat::InnerIterator it(S, k); it; ++it)
        t.emplace_back(ro + static_cast<int>(it.row()), co + static_cast<int>(it.col()),
                       it.value());
  };
  add(TL, 0, 0);
  add(TR, 0, n);
  add(BL, n, 0);
  add(BR, n, n);
  SpMat out(2 * n, 2 * n);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

StepSystem build_step(const DiscreteOperators& ops, const ProblemParams& prm,
                      const Septuplet& s, int i, double tau,
                      const ScalarField& p_prev, const ScalarField& z_prev,
                      const ScalarField& h_i, const ScalarField& k_i) {
  const double mu2 = prm.mu * prm.mu, nu2 = prm.nu * prm.nu;
  const SpMat Ma = ops.weighted_mass(s.a[i]);
  const SpMat Comega = ops.convection(s.omega[i]);
  const SpMat TL = SpMat((1.0 / tau) * (ops.M + mu2 * ops.K) + ops.K +
                         ops.weighted_mass(s.lambda[i]));
  const SpMat BR = SpMat((1.0 / tau) * (Ma + nu2 * ops.K) +
                         ops.weighted_mass(s.b[i]) + ops.weighted_stiffness(s.A[i]));
  StepSystem sys;
  sys.A = hcat2x2(TL, Comega, SpMat(Comega.transpose()), BR);
  const int n = ops.grid.n_nodes();
  sys.rhs.resize(2 * n);
  sys.rhs.head(n) = (1.0 / tau) * ((ops.M + mu2 * ops.K) * p_prev) -
                    ops.weighted_mass(s.xi[i]) * z_prev + ops.M * h_i;
  sys.rhs.tail(n) = (1.0 / tau) * ((Ma + nu2 * ops.K) * z_prev) -
                    ops.weighted_mass(s.c[i]) * p_prev + ops.M * k_i;
  return sys;
}

}  // namespace

void step_linear(const DiscreteOperators& ops, const ProblemParams& prm,
                 const Septuplet& s, int i, double tau,
                 const ScalarField& p_prev, const ScalarField& z_prev,
                 const ScalarField& h_i, const ScalarField& k_i,
                 ScalarField& p_out, ScalarField& z_out) {
  const double t1 = tau1(s, prm);
  if (!(tau > 0) || !(tau < t1))
    throw StepSizeError("step_linear: tau = " + std::to_string(tau) +
                        " violates the admissibility guard tau < " +
                        std::to_string(t1));
  StepSystem sys = build_step(ops, prm, s, i, tau, p_prev, z_prev, h_i, k_i);
  const Eigen::VectorXd x = solve_sparse(sys.A, sys.rhs);
  const int n = ops.grid.n_nodes();
  p_out = x.head(n);
  z_out = x.tail(n);
}

LinearState solve_linear(const DiscreteOperators& ops, const ProblemParams& prm,
                         const Septuplet& s,
                         const ScalarField& p0, const ScalarField& z0,
                         const LinearForcing& f) {
  const TimeGrid tg = s.a.time;
  LinearState st;
  st.p.time = st.z.time = tg;
  st.p.vals.assign(static_cast<size_t>(tg.n) + 1, p0);
  st.z.vals.assign(static_cast<size_t>(tg.n) + 1, z0);
  for (int i = 1; i <= tg.n; ++i)
    step_linear(ops, prm, s, i, tg.tau, st.p[i - 1], st.z[i - 1], f.h[i], f.k[i],
                st.p[i], st.z[i]);
  return st;
}

LinearForcing residual_forcing(const DiscreteOperators& ops,
                               const ProblemParams& prm, const Septuplet& s,
                               const LinearState& st) {
  const TimeGrid tg = st.p.time;
  const double tau = tg.tau;
  const double mu2 = prm.mu * prm.mu, nu2 = prm.nu * prm.nu;
  const int n = ops.grid.n_nodes();
  LinearForcing f;
  f.h.time = f.k.time = tg;
  f.h.vals.assign(static_cast<size_t>(tg.n) + 1, ScalarField::Zero(n));
  f.k.vals.assign(static_cast<size_t>(tg.n) + 1, ScalarField::Zero(n));
  for (int i = 1; i <= tg.n; ++i) {
    const SpMat Ma = ops.weighted_mass(s.a[i]);
    const SpMat Comega = ops.convection(s.omega[i]);
    const Eigen::VectorXd load_p =
        (1.0 / tau) * ((ops.M + mu2 * ops.K) * (st.p[i] - st.p[i - 1])) +
        (ops.K + ops.weighted_mass(s.lambda[i])) * st.p[i] + Comega * st.z[i] +
        ops.weighted_mass(s.xi[i]) * st.z[i - 1];
    const Eigen::VectorXd load_z =
        (1.0 / tau) * ((Ma + nu2 * ops.K) * (st.z[i] - st.z[i - 1])) +
        (ops.weighted_mass(s.b[i]) + ops.weighted_stiffness(s.A[i])) * st.z[i] +
        Comega.transpose() * st.p[i] + ops.weighted_mass(s.c[i]) * st.p[i - 1];
    f.h[i] = ops.solve_M(load_p);
    f.k[i] = ops.solve_M(load_z);
  }
  return f;
}

namespace {

double sq(double x) { return x * x; }

// X_i = |p_i|_H^2 + mu^2 |grad p_i|^2 + |sqrt(a_i) z_i|_H^2 + nu^2 |grad z_i|^2,
// with the weighted middle term using the lumped mass (matching M_a).
double node_energy(const DiscreteOperators& ops, const ProblemParams& prm,
                   const Septuplet& s, int i, const ScalarField& p,
                   const ScalarField& z) {
  const double wz = z.dot(ops.lumped.cwiseProduct(s.a[i]).cwiseProduct(z));
  return sq(norm_H(ops, p)) + sq(prm.mu) * p.dot(ops.K * p) + wz +
         sq(prm.nu) * z.dot(ops.K * z);
}

}  // namespace

StabilityReport stability_check(const DiscreteOperators& ops,
                                const ProblemParams& prm, const Septuplet& s,
                                const LinearState& st, const LinearForcing& f) {
  const TimeGrid tg = st.p.time;
  const double tau = tg.tau, T = tg.n * tg.tau;
  const double mu2 = sq(prm.mu), nu2 = sq(prm.nu);
  const double C2 = sq(prm.C_emb);
  const double floor4 = std::min({1.0, s.delta_a, mu2, nu2});

  StabilityReport rep;
  rep.C1 = 8.0 * (C2 + 1.0) / floor4 *
           (s.dta_Hs + s.b_Hs + s.c_Hs + s.lambda_Hs + s.xi_Hs + s.omega_Linf + 1.0);
  rep.C2 = 17.0 * (C2 * C2 + 1.0) * (T + 1.0) *
           (1.0 + mu2 + nu2 + C2 * s.a0_H) / std::min({1.0, sq(s.delta_a), sq(mu2), sq(nu2)});

  // X_0 uses a(0); the forcings enter through step-sum V* norms
  rep.X.resize(tg.n + 1);
  rep.X[0] = node_energy(ops, prm, s, 0, st.p[0], st.z[0]);
  for (int i = 1; i <= tg.n; ++i)
    rep.X[static_cast<size_t>(i)] = node_energy(ops, prm, s, i, st.p[i], st.z[i]);

  const double hV2 = sq(step_norm_Vstar(ops, f.h));
  const double kV2 = sq(step_norm_Vstar(ops, f.k));
  // The exponential factors overflow double for moderately rough septuplets
  // (4 C1 (T+1) can exceed 709), so the right-hand sides and slacks are
  // evaluated in long double and only the final ratios are narrowed.
  const long double e1 =
      std::exp(4.0L * static_cast<long double>(rep.C1) * (T + 1.0L)) *
          static_cast<long double>(rep.X[0]) +
      2.0L * (hV2 + kV2);
  rep.est1_rhs = static_cast<double>(e1);
  long double min_slack = std::numeric_limits<long double>::infinity();
  for (int i = 1; i <= tg.n; ++i) {
    const long double slack = (e1 - rep.X[static_cast<size_t>(i)]) /
                              std::max<long double>(e1, 1e-300L);
    min_slack = std::min(min_slack, slack);
  }
  rep.est1_min_slack = static_cast<double>(min_slack);

  double incp = 0, incz = 0;
  for (int i = 1; i <= tg.n; ++i) {
    incp += sq(norm_V(ops, ScalarField(st.p[i] - st.p[i - 1])));
    incz += sq(norm_V(ops, ScalarField(st.z[i] - st.z[i - 1])));
  }
  const double p0V2 = sq(norm_V(ops, st.p[0]));
  const double z0V2 = sq(norm_V(ops, st.z[0]));
  const long double base =
      static_cast<long double>(rep.C2) *
      std::exp(5.0L * static_cast<long double>(rep.C1) * (T + 1.0L)) *
      static_cast<long double>(p0V2 + z0V2 + hV2 + kV2);
  rep.est2_lhs = std::min(1.0, mu2) / (4.0 * tau) * incp;
  rep.est2_rhs = static_cast<double>(base);
  rep.est2_slack = static_cast<double>(
      (base - rep.est2_lhs) / std::max<long double>(base, 1e-300L));
  rep.est3_lhs = std::min(s.delta_a, nu2) / (4.0 * tau) * incz;
  const long double rhs3 = base * (sq(s.A_Linf) + 1.0L);
  rep.est3_rhs = static_cast<double>(rhs3);
  rep.est3_slack = static_cast<double>(
      (rhs3 - rep.est3_lhs) / std::max<long double>(rhs3, 1e-300L));

  rep.pass = rep.est1_min_slack >= -1e-9 && rep.est2_slack >= -1e-9 &&
             rep.est3_slack >= -1e-9;
  return rep;
}

BoundednessReport boundedness_check(const DiscreteOperators& ops,
                                    const ProblemParams& prm, const Septuplet& s,
                                    const LinearState& st, const LinearForcing& f,
                                    const ScalarField& p0, const ScalarField& z0) {
  const TimeGrid tg = st.p.time;
  const double tau = tg.tau, T = tg.n * tg.tau;
  const double mu2 = sq(prm.mu), nu2 = sq(prm.nu), C2 = sq(prm.C_emb);

  // |[p,z]|_{W^{1,2}(0,T;V^2)} with backward-difference time derivative
  double traj2 = 0, dt2 = 0, cmax2 = 0;
  for (int i = 1; i <= tg.n; ++i) {
    traj2 += sq(norm_V(ops, st.p[i])) + sq(norm_V(ops, st.z[i]));
    dt2 += sq(norm_V(ops, ScalarField((st.p[i] - st.p[i - 1]) / tau))) +
           sq(norm_V(ops, ScalarField((st.z[i] - st.z[i - 1]) / tau)));
  }
  for (int i = 0; i <= tg.n; ++i)
    cmax2 = std::max(cmax2, sq(norm_V(ops, st.p[i])) + sq(norm_V(ops, st.z[i])));
  BoundednessReport rep;
  rep.solution_norm = std::sqrt(tau * (traj2 + dt2)) + std::sqrt(cmax2);

  const double hV2 = sq(step_norm_Vstar(ops, f.h));
  const double kV2 = sq(step_norm_Vstar(ops, f.k));
  rep.input_norm = std::sqrt(sq(norm_V(ops, p0)) + sq(norm_V(ops, z0)) + hV2 + kV2);

  const double floor4 = std::min({1.0, s.delta_a, mu2, nu2});
  const double C1 = 8.0 * (C2 + 1.0) / floor4 *
                    (s.dta_Hs + s.b_Hs + s.c_Hs + s.lambda_Hs + s.xi_Hs +
                     s.omega_Linf + 1.0);
  const double Cq = 17.0 * (C2 * C2 + 1.0) * (T + 1.0) *
                    (1.0 + mu2 + nu2 + C2 * s.a0_H) /
                    std::min({1.0, sq(s.delta_a), sq(mu2), sq(nu2)});
  // Evaluated in long double: the pre-sqrt product overflows double once
  // 5 C1 (T+1) passes ~709 even though the constant itself fits after sqrt.
  rep.M1 = static_cast<double>(
      std::sqrt(48.0L * (1.0 + mu2 + nu2 + C2) * s.a0_H / floor4 *
                static_cast<long double>(Cq) *
                std::exp(5.0L * static_cast<long double>(C1) * (T + 1.0L)) *
                (s.A_Linf + 1.0L)));
  const double C4t = 4.0 * std::sqrt(2.0) * (1.0 + mu2 + nu2) * (1.0 + C2);
  rep.M0 = 1.0 / (std::sqrt(2.0) * (C4t + 1.0) *
                  (s.a_CH + s.b_Hs + s.c_Hs + s.lambda_Hs + s.xi_Hs + s.A_Linf +
                   s.omega_Linf + 1.0));

  rep.lower_ok = rep.M0 * rep.input_norm <= rep.solution_norm * (1.0 + 1e-9) + 1e-300;
  rep.upper_ok = rep.solution_norm <= rep.M1 * rep.input_norm * (1.0 + 1e-9) + 1e-300;
  return rep;
}

GronwallDiagnostic gronwall_diagnostic(const DiscreteOperators& ops,
                                       const ProblemParams& prm,
                                       const Septuplet& s1, const Septuplet& s2,
                                       const LinearState& st1, const LinearState& st2,
                                       const LinearForcing& f1, const LinearForcing& f2) {
  const TimeGrid tg = st1.p.time;
  const double tau = tg.tau;
  const double mu2 = sq(prm.mu), nu2 = sq(prm.nu), C2 = sq(prm.C_emb);
  const double floor4 = std::min({1.0, s1.delta_a, mu2, nu2});
  const int ne = ops.grid.n_elems(), d = ops.grid.dim, nv = d + 1;

  GronwallDiagnostic out;
  out.J.resize(tg.n + 1);
  out.bound.resize(tg.n + 1);

  auto Jat = [&](int i) {
    const ScalarField dp = st1.p[i] - st2.p[i];
    const ScalarField dz = st1.z[i] - st2.z[i];
    return node_energy(ops, prm, s1, i, dp, dz);
  };
  out.J[0] = Jat(0);
  out.bound[0] = out.J[0];

  long double acc_R0 = 0, acc_f = 0, acc_R1 = 0;
  double max_viol = 0;
  for (int i = 1; i <= tg.n; ++i) {
    // R0 at node i (time-pointwise H-norms of the first septuplet)
    const double dta_i = norm_H(ops, ScalarField((s1.a[i] - s1.a[i - 1]) / tau));
    double om1 = 0;
    for (int e = 0; e < ne; ++e) om1 = std::max(om1, s1.omega[i].row(e).norm());
    const double R0 = 12.0 * (C2 + 1.0) / floor4 *
                      (norm_H(ops, s1.lambda[i]) + norm_H(ops, s1.xi[i]) + dta_i +
                       norm_H(ops, s1.b[i]) + norm_H(ops, s1.c[i]) + om1 + 1.0);

    // R1 at node i: misfit weights against the second solution
    const double p2V2 = sq(norm_V(ops, st2.p[i]));
    const double z2V2 = sq(norm_V(ops, st2.z[i]));
    const double dlam = sq(norm_H(ops, ScalarField(s1.lambda[i] - s2.lambda[i])));
    const double dc = sq(norm_H(ops, ScalarField(s1.c[i] - s2.c[i])));
    const double dxi = sq(norm_H(ops, ScalarField(s1.xi[i] - s2.xi[i])));
    const double da = sq(norm_H(ops, ScalarField(s1.a[i] - s2.a[i])));
    const double db = sq(norm_H(ops, ScalarField(s1.b[i] - s2.b[i])));
    const VectorField gz2 = ops.gradient_of(st2.z[i]);
    double gz_dom = 0, dA_gz = 0, p_dom = 0;
    for (int e = 0; e < ne; ++e) {
      const Eigen::RowVectorXd dw = s1.omega[i].row(e) - s2.omega[i].row(e);
      const double me = ops.grid.elem_measure(e);
      gz_dom += me * sq(gz2.row(e).dot(dw));
      const Eigen::MatrixXd dA =
          s1.A[i][static_cast<size_t>(e)] - s2.A[i][static_cast<size_t>(e)];
      dA_gz += me * (dA * gz2.row(e).transpose()).squaredNorm();
      double pmid = 0;
      for (int k = 0; k < nv; ++k) pmid += st2.p[i](ops.grid.elems(e, k));
      pmid /= nv;
      p_dom += me * sq(pmid) * dw.squaredNorm();
    }
    const double R1 = p2V2 * (dlam + dc) + z2V2 * (dxi + da + db) + gz_dom +
                      dA_gz + p_dom;

    const double dh = sq(norm_Vstar_field(ops, ScalarField(f1.h[i] - f2.h[i])));
    const double dk = sq(norm_Vstar_field(ops, ScalarField(f1.k[i] - f2.k[i])));

    acc_R0 += tau * R0;
    acc_f += tau * (dh + dk);
    acc_R1 += tau * R1;
    out.J[static_cast<size_t>(i)] = Jat(i);
    const long double bd =
        std::exp(acc_R0) * (out.J[0] + acc_f + (C2 + 1.0L) * acc_R1);
    out.bound[static_cast<size_t>(i)] = static_cast<double>(bd);
    const double viol = static_cast<double>(
        (out.J[static_cast<size_t>(i)] - bd) / std::max<long double>(bd, 1e-300L));
    max_viol = std::max(max_viol, viol);
  }
  out.max_rel_violation = max_viol;
  out.pass = max_viol <= 1e-6;
  return out;
}

}  // namespace kwc

#include "kwc/septuplet.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace kwc {

static void require(bool cond, const char* msg) {
  if (!cond) throw ConfigError(msg);
}

void validate_septuplet(Septuplet& s, const DiscreteOperators& ops) {
  const int n = s.a.steps();
  const int nn = ops.grid.n_nodes(), ne = ops.grid.n_elems(), d = ops.grid.dim;
  require(n >= 1, "septuplet: needs at least one time step");
  for (const ScalarTrajectory* tr : {&s.a, &s.b, &s.c, &s.lambda, &s.xi}) {
    require(tr->steps() == n && tr->vals.size() == static_cast<size_t>(n) + 1,
            "septuplet: scalar trajectories must share the time grid");
    for (auto& f : tr->vals)
      require(f.size() == nn, "septuplet: scalar fields must be nodal");
  }
  require(s.omega.steps() == n, "septuplet: omega must share the time grid");
  require(s.A.steps() == n, "septuplet: A must share the time grid");
  require(s.delta_a > 0, "septuplet: delta_a must be positive");
  for (auto& w : s.omega.vals)
    require(w.rows() == ne && w.cols() == d, "septuplet: omega must be element-wise");

  double amin = std::numeric_limits<double>::infinity();
  for (auto& f : s.a.vals) amin = std::min(amin, f.minCoeff());
  require(amin >= s.delta_a - 1e-12, "septuplet: inf a must be >= delta_a");

  for (auto& Af : s.A.vals) {
    require(Af.size() == static_cast<size_t>(ne), "septuplet: A must be element-wise");
    for (auto& Ae : Af) {
      require(Ae.rows() == d && Ae.cols() == d, "septuplet: A entries must be dim x dim");
      require((Ae - Ae.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
              "septuplet: A must be symmetric");
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ae);
      require(es.eigenvalues().minCoeff() >= -1e-12,
              "septuplet: A must be positive semidefinite");
    }
  }

  const double tau = s.a.time.tau;
  auto hs = [&](const ScalarTrajectory& w) {
    double acc = 0;
    for (int i = 1; i <= n; ++i) {
      const double ni = norm_H(ops, w[i]);
      acc += ni * ni;
    }
    return std::sqrt(tau * acc);
  };
  double dta = 0;
  for (int i = 1; i <= n; ++i) {
    const double ni = norm_H(ops, ScalarField((s.a[i] - s.a[i - 1]) / tau));
    dta += ni * ni;
  }
  s.dta_Hs = std::sqrt(tau * dta);
  s.b_Hs = hs(s.b);
  s.c_Hs = hs(s.c);
  s.lambda_Hs = hs(s.lambda);
  s.xi_Hs = hs(s.xi);

  double wmax = 0;
  for (auto& w : s.omega.vals)
    for (int e = 0; e < ne; ++e) wmax = std::max(wmax, w.row(e).norm());
  s.omega_Linf = wmax;

  double Amax = 0;
  for (auto& Af : s.A.vals)
    for (auto& Ae : Af) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ae);
      Amax = std::max(Amax, es.eigenvalues().cwiseAbs().maxCoeff());
    }
  s.A_Linf = Amax;

  s.a0_H = norm_H(ops, s.a[0]);
  double acm = 0;
  for (auto& f : s.a.vals) acm = std::max(acm, norm_H(ops, f));
  s.a_CH = acm;
}

double tau1(const Septuplet& s, const ProblemParams& p) {
  const double top =
      std::min({1.0, s.delta_a, p.mu * p.mu, p.nu * p.nu});
  const double C2 = p.C_emb * p.C_emb;
  return top / (8.0 * (C2 + 1.0) * (s.lambda_Hs + s.b_Hs + s.omega_Linf + 1.0));
}

double tau2(const Septuplet& s, const ProblemParams& p) {
  const double mu2 = p.mu * p.mu, nu2 = p.nu * p.nu;
  const double top =
      std::min({1.0, s.delta_a * s.delta_a, mu2 * mu2, nu2 * nu2});
  const double C2 = p.C_emb * p.C_emb;
  const double sum = s.lambda_Hs + s.xi_Hs + s.b_Hs + s.c_Hs + s.dta_Hs +
                     s.omega_Linf + 1.0;
  const double t2 = top / (16.0 * (C2 + 1.0) * (C2 + 1.0) * sum * sum);
  return std::min(t2, tau1(s, p));
}

}  // namespace kwc

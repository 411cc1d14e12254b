#include "kwc/oracle.hpp"

#include "kwc/control.hpp"

namespace kwc {

SpacetimeSystem assemble_spacetime(const DiscreteOperators& ops,
                                   const ProblemParams& prm, const Septuplet& s,
                                   const ScalarField& p0, const ScalarField& z0,
                                   const LinearForcing& f) {
  const TimeGrid tg = s.a.time;
  const int nn = ops.grid.n_nodes(), n = tg.n;
  if (nn > 16 || n > 8)
    throw ConfigError("assemble_spacetime: capped at 16 nodes and 8 steps");
  const double tau = tg.tau;
  const double mu2 = prm.mu * prm.mu, nu2 = prm.nu * prm.nu;

  SpacetimeSystem sys;
  sys.n_nodes = nn;
  sys.n_steps = n;
  const int N = 2 * nn * n;
  sys.A = Eigen::MatrixXd::Zero(N, N);
  sys.rhs = Eigen::VectorXd::Zero(N);

  const Eigen::MatrixXd Md = Eigen::MatrixXd(ops.M);
  const Eigen::MatrixXd Kd = Eigen::MatrixXd(ops.K);
  auto pr = [nn](int i) { return 2 * nn * (i - 1); };        // row/col of p_i block
  auto zr = [nn](int i) { return 2 * nn * (i - 1) + nn; };   // row/col of z_i block

  for (int i = 1; i <= n; ++i) {
    const Eigen::MatrixXd Ma = Eigen::MatrixXd(ops.weighted_mass(s.a[i]));
    const Eigen::MatrixXd Mlam = Eigen::MatrixXd(ops.weighted_mass(s.lambda[i]));
    const Eigen::MatrixXd Mb = Eigen::MatrixXd(ops.weighted_mass(s.b[i]));
    const Eigen::MatrixXd Mc = Eigen::MatrixXd(ops.weighted_mass(s.c[i]));
    const Eigen::MatrixXd Mxi = Eigen::MatrixXd(ops.weighted_mass(s.xi[i]));
    const Eigen::MatrixXd KA = Eigen::MatrixXd(ops.weighted_stiffness(s.A[i]));
    const Eigen::MatrixXd Cw = Eigen::MatrixXd(ops.convection(s.omega[i]));
    const Eigen::MatrixXd P = (1.0 / tau) * (Md + mu2 * Kd);
    const Eigen::MatrixXd Z = (1.0 / tau) * (Ma + nu2 * Kd);

    sys.A.block(pr(i), pr(i), nn, nn) = P + Kd + Mlam;
    sys.A.block(pr(i), zr(i), nn, nn) = Cw;
    sys.A.block(zr(i), pr(i), nn, nn) = Cw.transpose();
    sys.A.block(zr(i), zr(i), nn, nn) = Z + Mb + KA;
    sys.rhs.segment(pr(i), nn) = Md * f.h[i];
    sys.rhs.segment(zr(i), nn) = Md * f.k[i];
    if (i == 1) {
      sys.rhs.segment(pr(i), nn) += P * p0 - Mxi * z0;
      sys.rhs.segment(zr(i), nn) += Z * z0 - Mc * p0;
    } else {
      sys.A.block(pr(i), pr(i - 1), nn, nn) -= P;
      sys.A.block(pr(i), zr(i - 1), nn, nn) += Mxi;
      sys.A.block(zr(i), zr(i - 1), nn, nn) -= Z;
      sys.A.block(zr(i), pr(i - 1), nn, nn) += Mc;
    }
  }
  return sys;
}

FdGradient fd_gradient(const DiscreteOperators& ops, const StateInstance& inst,
                       const ScalarTrajectory& du, const ScalarTrajectory& dv,
                       double delta) {
  auto eval = [&](double d) {
    auto at = [&](double sgn) {
      StateInstance probe = inst;
      for (int i = 0; i <= inst.tg.n; ++i) {
        probe.u[i] = inst.u[i] + sgn * d * du[i];
        probe.v[i] = inst.v[i] + sgn * d * dv[i];
      }
      const StateTrajectory st = solve_state(ops, probe);
      return cost(ops, probe, st);
    };
    return (at(1.0) - at(-1.0)) / (2.0 * d);
  };
  FdGradient out;
  out.fd_coarse = eval(delta);
  out.fd_fine = eval(delta / 2.0);
  out.extrapolated = (4.0 * out.fd_fine - out.fd_coarse) / 3.0;
  out.spread = std::abs(out.fd_fine - out.fd_coarse);
  return out;
}

}  // namespace kwc

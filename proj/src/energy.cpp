#include "kwc/energy.hpp"

#include "kwc/kernel.hpp"

namespace kwc {

double kwc_energy(const DiscreteOperators& ops, double eps,
                  const NonlinearityBundle& bundle,
                  const ScalarField& eta, const ScalarField& theta) {
  const auto& grid = ops.grid;
  const int d = grid.dim, nv = d + 1;
  const VectorField geta = ops.gradient_of(eta);
  const VectorField gtheta = ops.gradient_of(theta);
  double F = 0;
  for (int e = 0; e < grid.n_elems(); ++e) {
    double eta_mid = 0;
    for (int i = 0; i < nv; ++i) eta_mid += eta(grid.elems(e, i));
    eta_mid /= nv;
    const Eigen::VectorXd gt = gtheta.row(e).transpose();
    F += grid.elem_measure(e) *
         (0.5 * geta.row(e).squaredNorm() + bundle.G(eta_mid) +
          bundle.alpha(eta_mid) * gamma_eps(eps, gt));
  }
  return F;
}

}  // namespace kwc

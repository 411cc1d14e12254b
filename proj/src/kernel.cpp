#include "kwc/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace kwc {

double gamma_eps(double eps, const Eigen::VectorXd& y) {
  if (eps < 0) throw std::invalid_argument("gamma_eps: eps must be >= 0");
  return std::sqrt(eps * eps + y.squaredNorm());
}

Eigen::VectorXd grad_gamma_eps(double eps, const Eigen::VectorXd& y) {
  if (!(eps > 0))
    throw std::invalid_argument("grad_gamma_eps: requires eps > 0");
  return y / std::sqrt(eps * eps + y.squaredNorm());
}

Eigen::MatrixXd hess_gamma_eps(double eps, const Eigen::VectorXd& y) {
  if (!(eps > 0))
    throw std::invalid_argument("hess_gamma_eps: requires eps > 0");
  const double g2 = eps * eps + y.squaredNorm();
  const double g = std::sqrt(g2);
  const auto n = y.size();
  return (g2 * Eigen::MatrixXd::Identity(n, n) - y * y.transpose()) / (g2 * g);
}

SgrValue sgr(const Eigen::VectorXd& y) {
  SgrValue out;
  const double r = y.norm();
  if (r == 0.0) {
    out.ball = true;
    out.dir = Eigen::VectorXd::Zero(y.size());
  } else {
    out.ball = false;
    out.dir = y / r;
  }
  return out;
}

bool sgr_contains(const Eigen::VectorXd& y, const Eigen::VectorXd& v, double tol) {
  const double r = y.norm();
  if (r == 0.0) return v.norm() <= 1.0 + tol;
  return (v - y / r).norm() <= tol;
}

}  // namespace kwc

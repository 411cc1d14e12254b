#pragma once

#include <Eigen/Dense>

namespace kwc {

/// Regularized length kernel gamma_eps(y) = sqrt(eps^2 + |y|^2).
/// All three derivatives require eps > 0 only where stated.
double gamma_eps(double eps, const Eigen::VectorXd& y);

/// Gradient y / sqrt(eps^2 + |y|^2); requires eps > 0 (throws
/// std::invalid_argument at eps = 0, where the kernel is nonsmooth at 0).
Eigen::VectorXd grad_gamma_eps(double eps, const Eigen::VectorXd& y);

/// Hessian (g^2 I - y y^T) / g^3 with g = gamma_eps(y); requires eps > 0.
/// Symmetric positive semidefinite, entries bounded by 1/eps.
Eigen::MatrixXd hess_gamma_eps(double eps, const Eigen::VectorXd& y);

/// Value of the subgradient set of the Euclidean norm at y: the single
/// point y/|y| away from the origin, the closed unit ball at the origin.
struct SgrValue {
  bool ball = false;     // true only at y = 0
  Eigen::VectorXd dir;   // y/|y| when !ball; zero vector otherwise
};

SgrValue sgr(const Eigen::VectorXd& y);

/// Membership test v in Sgr(y), with tolerance tol on the defining
/// conditions (|v| <= 1 at the origin; v = y/|y| otherwise).
bool sgr_contains(const Eigen::VectorXd& y, const Eigen::VectorXd& v,
                  double tol = 1e-12);

}  // namespace kwc

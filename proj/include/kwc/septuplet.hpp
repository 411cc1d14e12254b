#pragma once

#include "kwc/operators.hpp"
#include "kwc/params.hpp"

namespace kwc {

/// Raised when a step size violates its admissibility guard.
struct StepSizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Coefficient septuplet [a, b, c, lambda, xi, omega, A] of the linear
/// pseudo-parabolic system, sampled at time nodes. a, b, c, lambda, xi
/// are nodal scalar trajectories; omega is an element-wise vector
/// trajectory; A an element-wise symmetric positive semidefinite matrix
/// trajectory. Membership class: a of bounded variation in time with
/// inf a >= delta_a > 0, omega and A essentially bounded.
///
/// Cached norms (filled by validate_septuplet, used by the step guards
/// and stability constants):
///  - *_Hs are step-sum L2(0,T;H) norms, tau * sum over nodes 1..n;
///  - dta_Hs uses backward differences (a_i - a_{i-1})/tau;
///  - omega_Linf is the essential sup of the Euclidean length;
///  - A_Linf the essential sup of the spectral norm;
///  - a0_H = |a(0)|_H, a_CH = max_i |a_i|_H.
struct Septuplet {
  ScalarTrajectory a, b, c, lambda, xi;
  VectorTrajectory omega;
  MatrixTrajectory A;
  double delta_a = 1.0;

  double dta_Hs = 0, b_Hs = 0, c_Hs = 0, lambda_Hs = 0, xi_Hs = 0;
  double omega_Linf = 0, A_Linf = 0;
  double a0_H = 0, a_CH = 0;
};

/// Checks class membership (shapes on one time grid, inf a >= delta_a > 0,
/// A symmetric PSD up to 1e-12) and fills the cached norms. Throws
/// ConfigError naming the violated condition.
void validate_septuplet(Septuplet& s, const DiscreteOperators& ops);

/// Admissible step-size threshold guarding the implicit steps:
/// tau1 = (1 ^ delta_a ^ mu^2 ^ nu^2)
///        / (8 (C_emb^2 + 1) (|lambda|_Hs + |b|_Hs + |omega|_Linf + 1)).
double tau1(const Septuplet& s, const ProblemParams& p);

/// Smaller threshold under which the discrete energy estimates hold:
/// tau2 = min(tau1, (1 ^ delta_a^2 ^ mu^4 ^ nu^4)
///   / (16 (C_emb^2+1)^2 (|lambda|_Hs + |xi|_Hs + |b|_Hs + |c|_Hs
///                         + |dt a|_Hs + |omega|_Linf + 1)^2)).
double tau2(const Septuplet& s, const ProblemParams& p);

}  // namespace kwc

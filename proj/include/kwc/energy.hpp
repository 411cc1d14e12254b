#pragma once

#include "kwc/bundle.hpp"
#include "kwc/operators.hpp"

namespace kwc {

/// Free energy of a state pair:
///   F_eps(eta, theta) = 1/2 |grad eta|^2 + int G(eta)
///                       + int alpha(eta) gamma_eps(grad theta).
/// Element-wise quadrature: gradients are exact per element; G(eta) and
/// alpha(eta) use the element-midpoint value of eta. Defined for eps >= 0
/// (at eps = 0 the kernel is the plain Euclidean norm).
double kwc_energy(const DiscreteOperators& ops, double eps,
                  const NonlinearityBundle& bundle,
                  const ScalarField& eta, const ScalarField& theta);

}  // namespace kwc

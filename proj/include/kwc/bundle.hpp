#pragma once

#include <functional>
#include <string>

namespace kwc {

/// The scalar nonlinearities entering the phase-field system, with the
/// derivatives the solvers need. Contract (checked by validate_bundle):
///  - G >= 0 with G' = g, both C^1 on the sampled range;
///  - alpha is C^2 convex with alpha'(0) = 0;
///  - alpha0 >= delta_star > 0.
struct NonlinearityBundle {
  std::function<double(double)> g, gp;          // g and g'
  std::function<double(double)> G;              // potential, G' = g
  std::function<double(double)> alpha0, alpha0p;
  std::function<double(double)> alpha, alphap, alphapp;
  double delta_star = 1.0;
};

/// Default bundle: G(r) = (r-1)^2/2, g(r) = r-1, alpha0 = alpha = 1 + r^2
/// (so delta_star = 1), alpha' = 2r, alpha'' = 2.
NonlinearityBundle default_bundle();

/// Samples the bundle contract on >= n uniformly spaced points of
/// [lo, hi]; throws ConfigError naming the first violated condition.
/// G' = g and the alpha derivatives are checked by central differences.
void validate_bundle(const NonlinearityBundle& b, double lo, double hi,
                     int n = 2001);

}  // namespace kwc

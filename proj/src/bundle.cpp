#include "kwc/bundle.hpp"

#include <cmath>

#include "kwc/grid.hpp"

namespace kwc {

NonlinearityBundle default_bundle() {
  NonlinearityBundle b;
  b.g = [](double r) { return r - 1.0; };
  b.gp = [](double) { return 1.0; };
  b.G = [](double r) { return 0.5 * (r - 1.0) * (r - 1.0); };
  b.alpha0 = [](double r) { return 1.0 + r * r; };
  b.alpha0p = [](double r) { return 2.0 * r; };
  b.alpha = [](double r) { return 1.0 + r * r; };
  b.alphap = [](double r) { return 2.0 * r; };
  b.alphapp = [](double) { return 2.0; };
  b.delta_star = 1.0;
  return b;
}

void validate_bundle(const NonlinearityBundle& b, double lo, double hi, int n) {
  if (!(hi > lo)) throw ConfigError("validate_bundle: requires hi > lo");
  if (n < 1000) n = 1000;
  if (!(b.delta_star > 0))
    throw ConfigError("bundle: delta_star must be positive");
  if (std::abs(b.alphap(0.0)) > 1e-10)
    throw ConfigError("bundle: alpha'(0) must vanish");

  const double fd_h = (hi - lo) / (8.0 * n);
  // tolerance for central-difference consistency of the stated derivatives
  auto close = [&](double fd, double v) {
    return std::abs(fd - v) <= 1e-5 * (1.0 + std::abs(v));
  };
  for (int j = 0; j <= n; ++j) {
    const double r = lo + (hi - lo) * j / n;
    if (b.G(r) < -1e-12) throw ConfigError("bundle: G must be nonnegative");
    if (b.alphapp(r) < -1e-12)
      throw ConfigError("bundle: alpha'' must be nonnegative (alpha convex)");
    if (b.alpha0(r) < b.delta_star - 1e-12)
      throw ConfigError("bundle: alpha0 must stay >= delta_star");
    if (!close((b.G(r + fd_h) - b.G(r - fd_h)) / (2 * fd_h), b.g(r)))
      throw ConfigError("bundle: G' inconsistent with g");
    if (!close((b.g(r + fd_h) - b.g(r - fd_h)) / (2 * fd_h), b.gp(r)))
      throw ConfigError("bundle: g' inconsistent with gp");
    if (!close((b.alpha(r + fd_h) - b.alpha(r - fd_h)) / (2 * fd_h), b.alphap(r)))
      throw ConfigError("bundle: alpha' inconsistent with alphap");
    if (!close((b.alphap(r + fd_h) - b.alphap(r - fd_h)) / (2 * fd_h), b.alphapp(r)))
      throw ConfigError("bundle: alpha'' inconsistent with alphapp");
    if (!close((b.alpha0(r + fd_h) - b.alpha0(r - fd_h)) / (2 * fd_h), b.alpha0p(r)))
      throw ConfigError("bundle: alpha0' inconsistent with alpha0p");
  }
}

}  // namespace kwc

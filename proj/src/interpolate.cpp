#include "kwc/interpolate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kwc {

ScalarField time_interpolate(const ScalarTrajectory& w, Interp kind, double t) {
  const double tau = w.time.tau;
  const int n = w.steps();
  if (!(t >= 0.0) || !(t <= w.time.T))
    throw std::invalid_argument("time_interpolate: t outside [0, T]");

  switch (kind) {
    case Interp::Forward: {
      if (t <= 0.0) return w[0];
      // t in (t_{i-1}, t_i] -> w_i
      int i = static_cast<int>(std::ceil(t / tau - 1e-12));
      i = std::clamp(i, 1, n);
      return w[i];
    }
    case Interp::Backward: {
      // t in (t_i, t_{i+1}] -> w_i; t = 0 -> w_0 by convention
      if (t <= 0.0) return w[0];
      int i = static_cast<int>(std::ceil(t / tau - 1e-12)) - 1;
      i = std::clamp(i, 0, n);
      return w[i];
    }
    case Interp::Linear: {
      int i = static_cast<int>(std::floor(t / tau + 1e-12));
      i = std::clamp(i, 0, n - 1);
      const double s = std::clamp((t - i * tau) / tau, 0.0, 1.0);
      return (1.0 - s) * w[i] + s * w[i + 1];
    }
  }
  throw std::invalid_argument("time_interpolate: unknown kind");
}

}  // namespace kwc

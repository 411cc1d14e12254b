#pragma once

#include "kwc/operators.hpp"

namespace kwc {

/// Box obstacle set {u : lower <= u <= upper a.e.}, stored as nodal
/// trajectories on the control's time grid. Requires lower <= upper
/// everywhere (checked at construction helpers).
struct BoxConstraint {
  ScalarTrajectory lower;
  ScalarTrajectory upper;
};

/// Constant-in-space-and-time box.
BoxConstraint uniform_box(const TimeGrid& tg, int n_nodes, double lo, double hi);

/// Pointwise clamp of a trajectory onto the box; the metric projection
/// in every L2-type norm built from pointwise quadrature.
ScalarTrajectory project_box(const BoxConstraint& box, const ScalarTrajectory& u);

}  // namespace kwc

#include "kwc/box.hpp"

namespace kwc {

BoxConstraint uniform_box(const TimeGrid& tg, int n_nodes, double lo, double hi) {
  if (!(hi >= lo)) throw ConfigError("box: upper must be >= lower");
  BoxConstraint box;
  box.lower = constant_trajectory<ScalarField>(tg, ScalarField::Constant(n_nodes, lo));
  box.upper = constant_trajectory<ScalarField>(tg, ScalarField::Constant(n_nodes, hi));
  return box;
}

ScalarTrajectory project_box(const BoxConstraint& box, const ScalarTrajectory& u) {
  ScalarTrajectory out = u;
  for (int i = 0; i <= u.steps(); ++i)
    out[i] = u[i].cwiseMax(box.lower[i]).cwiseMin(box.upper[i]);
  return out;
}

}  // namespace kwc

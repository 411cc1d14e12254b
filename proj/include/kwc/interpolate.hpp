#pragma once

#include "kwc/fields.hpp"

namespace kwc {

enum class Interp {
  Forward,   // piecewise constant from the right: t in (t_{i-1}, t_i] -> w_i
  Backward,  // piecewise constant from the left:  t in (t_i, t_{i+1}] -> w_i
  Linear     // continuous piecewise linear through the nodes
};

/// Evaluates a time interpolant of a node sequence at t in [0, T].
///
/// Forward sends t <= 0 to w_0 (the initial element of the sequence
/// fills the leading interval) and t in (t_{i-1}, t_i] to w_i.
/// Backward sends t in (t_i, t_{i+1}] to w_i; t = 0 belongs to no such
/// interval and is assigned w_0 by right-limit convention.
ScalarField time_interpolate(const ScalarTrajectory& w, Interp kind, double t);

}  // namespace kwc

#pragma once

#include <Eigen/Dense>
#include <vector>

namespace kwc {

/// Nodal scalar field: one value per grid node (piecewise linear).
using ScalarField = Eigen::VectorXd;

/// Element-wise vector field: one row per element, one column per
/// space dimension (piecewise constant, e.g. a P1 gradient).
using VectorField = Eigen::MatrixXd;

/// Element-wise matrix field: one dim x dim matrix per element.
using MatrixField = std::vector<Eigen::MatrixXd>;

/// Uniform time grid for [0, T]: nodes t_i = i*tau, i = 0..n, where
/// n is the smallest integer with n*tau >= T.
struct TimeGrid {
  double T = 1.0;
  double tau = 1e-2;
  int n = 100;

  double node(int i) const { return tau * i; }
};

TimeGrid make_time_grid(double T, double tau);

/// Time series of fields on a common TimeGrid; vals.size() == time.n + 1.
template <class FieldT>
struct Trajectory {
  TimeGrid time;
  std::vector<FieldT> vals;

  int steps() const { return time.n; }
  const FieldT& operator[](int i) const { return vals[static_cast<size_t>(i)]; }
  FieldT& operator[](int i) { return vals[static_cast<size_t>(i)]; }
};

using ScalarTrajectory = Trajectory<ScalarField>;
using VectorTrajectory = Trajectory<VectorField>;
using MatrixTrajectory = Trajectory<MatrixField>;

/// Constant-in-time trajectory holding copies of one field.
template <class FieldT>
Trajectory<FieldT> constant_trajectory(const TimeGrid& tg, const FieldT& f) {
  Trajectory<FieldT> out;
  out.time = tg;
  out.vals.assign(static_cast<size_t>(tg.n) + 1, f);
  return out;
}

/// Reverses a trajectory in time: out[i] = in[n - i]. An involution.
template <class FieldT>
Trajectory<FieldT> time_reverse(const Trajectory<FieldT>& in) {
  Trajectory<FieldT> out;
  out.time = in.time;
  out.vals.assign(in.vals.rbegin(), in.vals.rend());
  return out;
}

}  // namespace kwc

#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "kwc/fields.hpp"

namespace kwc {

/// Raised when a configuration or argument contract is violated.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Simplicial P1 grid on an interval (dim 1) or axis-aligned rectangle
/// (dim 2, each cell split into two triangles along the same diagonal).
struct SpatialGrid {
  int dim = 1;
  Eigen::MatrixXd nodes;        // n_nodes x dim coordinates
  Eigen::MatrixXi elems;        // n_elems x (dim+1) node indices
  std::vector<bool> on_boundary;
  Eigen::VectorXd elem_measure; // length (1D) / area (2D) per element
  Eigen::MatrixXd elem_mid;     // element centroids, n_elems x dim
  double domain_measure = 0.0;

  int n_nodes() const { return static_cast<int>(nodes.rows()); }
  int n_elems() const { return static_cast<int>(elems.rows()); }
};

/// Builds a uniform grid. resolution gives cell counts per axis
/// (so 1D with resolution {m} has m+1 nodes); extents gives [lo, hi]
/// per axis. Throws ConfigError on empty/degenerate input.
SpatialGrid build_grid(int dim, const std::vector<int>& resolution,
                       const std::vector<std::array<double, 2>>& extents);

}  // namespace kwc

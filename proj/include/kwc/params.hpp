#pragma once

#include "kwc/grid.hpp"

namespace kwc {

/// Problem-wide constants: regularization weights mu, nu > 0, kernel
/// parameter eps, control injections L_u, L_v >= 0, cost weights
/// M_eta, M_theta, M_u, M_v >= 0, and the embedding constant C_emb
/// standing in for the V -> L4 embedding norm in the printed estimates.
///
/// The coupling rule ties injections to their cost weights: for each
/// control channel, L and M vanish together (a channel is either fully
/// present or fully absent).
struct ProblemParams {
  double mu = 1.0;
  double nu = 1.0;
  double eps = 0.5;
  double L_u = 1.0, L_v = 1.0;
  double M_eta = 1.0, M_theta = 1.0;
  double M_u = 1.0, M_v = 1.0;
  double C_emb = 2.0;

  /// Throws ConfigError on mu, nu <= 0, eps < 0, negative weights, or a
  /// violated coupling rule (L_u*M_u = 0 requires L_u = M_u = 0; same for v).
  void validate() const;
};

}  // namespace kwc

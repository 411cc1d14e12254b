#include "kwc/params.hpp"

namespace kwc {

void ProblemParams::validate() const {
  if (!(mu > 0) || !(nu > 0)) throw ConfigError("params: mu and nu must be positive");
  if (eps < 0) throw ConfigError("params: eps must be nonnegative");
  if (L_u < 0 || L_v < 0 || M_eta < 0 || M_theta < 0 || M_u < 0 || M_v < 0)
    throw ConfigError("params: weights must be nonnegative");
  if (!(C_emb > 0)) throw ConfigError("params: C_emb must be positive");
  if (L_u * M_u == 0.0 && (L_u != 0.0 || M_u != 0.0))
    throw ConfigError("params: L_u and M_u must vanish together");
  if (L_v * M_v == 0.0 && (L_v != 0.0 || M_v != 0.0))
    throw ConfigError("params: L_v and M_v must vanish together");
}

}  // namespace kwc

#include "kwc/grid.hpp"

#include <cmath>

namespace kwc {

TimeGrid make_time_grid(double T, double tau) {
  if (!(T > 0) || !(tau > 0)) throw ConfigError("time grid requires T > 0 and tau > 0");
  // smallest n with n*tau >= T, robust to roundoff in T/tau
  int n = static_cast<int>(std::ceil(T / tau - 1e-9));
  if (n < 1) n = 1;
  while (n * tau < T && (n + 1) * tau >= T) ++n;
  while (n > 1 && (n - 1) * tau >= T) --n;
  return TimeGrid{T, tau, n};
}

static SpatialGrid build_interval(int m, double lo, double hi) {
  SpatialGrid g;
  g.dim = 1;
  const double h = (hi - lo) / m;
  g.nodes.resize(m + 1, 1);
  for (int j = 0; j <= m; ++j) g.nodes(j, 0) = lo + h * j;
  g.elems.resize(m, 2);
  g.elem_measure.resize(m);
  g.elem_mid.resize(m, 1);
  for (int e = 0; e < m; ++e) {
    g.elems(e, 0) = e;
    g.elems(e, 1) = e + 1;
    g.elem_measure(e) = h;
    g.elem_mid(e, 0) = lo + h * (e + 0.5);
  }
  g.on_boundary.assign(m + 1, false);
  g.on_boundary.front() = g.on_boundary.back() = true;
  g.domain_measure = hi - lo;
  return g;
}

static SpatialGrid build_rectangle(int mx, int my, double x0, double x1,
                                   double y0, double y1) {
  SpatialGrid g;
  g.dim = 2;
  const double hx = (x1 - x0) / mx, hy = (y1 - y0) / my;
  const int nx = mx + 1, ny = my + 1;
  g.nodes.resize(nx * ny, 2);
  g.on_boundary.assign(nx * ny, false);
  auto id = [nx](int ix, int iy) { return iy * nx + ix; };
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      g.nodes(id(ix, iy), 0) = x0 + hx * ix;
      g.nodes(id(ix, iy), 1) = y0 + hy * iy;
      if (ix == 0 || ix == mx || iy == 0 || iy == my) g.on_boundary[id(ix, iy)] = true;
    }
  const int ne = 2 * mx * my;
  g.elems.resize(ne, 3);
  g.elem_measure.resize(ne);
  g.elem_mid.resize(ne, 2);
  int e = 0;
  for (int iy = 0; iy < my; ++iy)
    for (int ix = 0; ix < mx; ++ix) {
      const int v00 = id(ix, iy), v10 = id(ix + 1, iy);
      const int v01 = id(ix, iy + 1), v11 = id(ix + 1, iy + 1);
      // both triangles share the v00-v11 diagonal
      g.elems.row(e) << v00, v10, v11;
      g.elems.row(e + 1) << v00, v11, v01;
      for (int t = 0; t < 2; ++t) {
        const int ee = e + t;
        g.elem_measure(ee) = 0.5 * hx * hy;
        g.elem_mid.row(ee) =
            (g.nodes.row(g.elems(ee, 0)) + g.nodes.row(g.elems(ee, 1)) +
             g.nodes.row(g.elems(ee, 2))) / 3.0;
      }
      e += 2;
    }
  g.domain_measure = (x1 - x0) * (y1 - y0);
  return g;
}

SpatialGrid build_grid(int dim, const std::vector<int>& resolution,
                       const std::vector<std::array<double, 2>>& extents) {
  if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2");
  if (resolution.size() != static_cast<size_t>(dim) ||
      extents.size() != static_cast<size_t>(dim))
    throw ConfigError("resolution/extents must have one entry per dimension");
  for (int r : resolution)
    if (r < 1) throw ConfigError("grid resolution must be >= 1 per axis");
  for (auto& ex : extents)
    if (!(ex[1] > ex[0])) throw ConfigError("grid extents must satisfy hi > lo");
  if (dim == 1) return build_interval(resolution[0], extents[0][0], extents[0][1]);
  return build_rectangle(resolution[0], resolution[1], extents[0][0], extents[0][1],
                         extents[1][0], extents[1][1]);
}

}  // namespace kwc

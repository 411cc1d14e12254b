#include <cmath>

#include "doctest.h"
#include "kwc/box.hpp"
#include "kwc/bundle.hpp"
#include "kwc/energy.hpp"
#include "kwc/kernel.hpp"
#include "test_helpers.hpp"

using namespace kwc;

TEST_CASE("kernel values at a pinned point") {
  Eigen::Vector2d y(3.0, 4.0);
  const double eps = 0.5;
  const double gv = gamma_eps(eps, y);
  CHECK(gv == doctest::Approx(std::sqrt(25.25)).epsilon(1e-15));
  CHECK(gamma_eps(0.0, y) == doctest::Approx(5.0).epsilon(1e-15));

  const Eigen::VectorXd gr = grad_gamma_eps(eps, y);
  CHECK(gr(0) == doctest::Approx(3.0 / gv).epsilon(1e-15));
  CHECK(gr(1) == doctest::Approx(4.0 / gv).epsilon(1e-15));
  CHECK(gr.norm() < 1.0);

  const Eigen::MatrixXd H = hess_gamma_eps(eps, y);
  const double g3 = gv * gv * gv;
  CHECK(H(0, 0) == doctest::Approx((25.25 - 9.0) / g3).epsilon(1e-14));
  CHECK(H(0, 1) == doctest::Approx(-12.0 / g3).epsilon(1e-14));
  CHECK(H(1, 0) == doctest::Approx(H(0, 1)).epsilon(1e-15));
  CHECK(H(1, 1) == doctest::Approx((25.25 - 16.0) / g3).epsilon(1e-14));
  // planar determinant identity: det H = eps^2 / gamma^4
  const double det = H(0, 0) * H(1, 1) - H(0, 1) * H(1, 0);
  CHECK(det == doctest::Approx(eps * eps / (gv * gv * gv * gv)).epsilon(1e-12));
}

TEST_CASE("kernel derivative calls need a positive eps") {
  Eigen::VectorXd y(1);
  y << 0.3;
  CHECK_THROWS_AS(grad_gamma_eps(0.0, y), std::invalid_argument);
  CHECK_THROWS_AS(hess_gamma_eps(0.0, y), std::invalid_argument);
  CHECK(gamma_eps(0.25, Eigen::VectorXd::Zero(2)) == 0.25);
}

TEST_CASE("subgradient selection and membership") {
  Eigen::VectorXd y(1);
  y << 0.3;
  const SgrValue s = sgr(y);
  CHECK_FALSE(s.ball);
  CHECK(s.dir(0) == doctest::Approx(1.0));
  CHECK(sgr_contains(y, s.dir));
  Eigen::VectorXd wrong(1);
  wrong << -1.0;
  CHECK_FALSE(sgr_contains(y, wrong));

  const SgrValue z = sgr(Eigen::VectorXd::Zero(2));
  CHECK(z.ball);
  Eigen::Vector2d inside(0.6, 0.6), outside(0.9, 0.9);
  CHECK(sgr_contains(Eigen::VectorXd::Zero(2), inside));
  CHECK_FALSE(sgr_contains(Eigen::VectorXd::Zero(2), outside));
}

TEST_CASE("default bundle satisfies its own contract") {
  const NonlinearityBundle b = default_bundle();
  CHECK(b.delta_star == doctest::Approx(1.0));
  CHECK(b.G(1.0) == doctest::Approx(0.0));
  CHECK(b.g(2.0) == doctest::Approx(1.0));
  CHECK(b.alpha(2.0) == doctest::Approx(5.0));
  CHECK(b.alphap(0.0) == doctest::Approx(0.0));
  CHECK_NOTHROW(validate_bundle(b, -3.0, 3.0));
}

TEST_CASE("bundle validation rejects each broken condition") {
  // negative potential
  NonlinearityBundle b = default_bundle();
  b.G = [](double r) { return r; };
  b.g = [](double) { return 1.0; };
  b.gp = [](double) { return 0.0; };
  CHECK_THROWS_AS(validate_bundle(b, -1.0, 1.0), ConfigError);

  // derivative mismatch: g is not G'
  b = default_bundle();
  b.g = [](double r) { return 3.0 * r; };
  CHECK_THROWS_AS(validate_bundle(b, -1.0, 1.0), ConfigError);

  // concave alpha
  b = default_bundle();
  b.alpha = [](double r) { return 2.0 - r * r; };
  b.alphap = [](double r) { return -2.0 * r; };
  b.alphapp = [](double) { return -2.0; };
  CHECK_THROWS_AS(validate_bundle(b, -1.0, 1.0), ConfigError);

  // alpha'(0) != 0
  b = default_bundle();
  b.alpha = [](double r) { return 1.0 + (r - 0.5) * (r - 0.5); };
  b.alphap = [](double r) { return 2.0 * (r - 0.5); };
  b.alphapp = [](double) { return 2.0; };
  CHECK_THROWS_AS(validate_bundle(b, -1.0, 1.0), ConfigError);

  // alpha0 dips under delta_star
  b = default_bundle();
  b.alpha0 = [](double) { return 0.5; };
  b.alpha0p = [](double) { return 0.0; };
  CHECK_THROWS_AS(validate_bundle(b, -1.0, 1.0), ConfigError);
}

TEST_CASE("energy of flat fields is exact") {
  const SpatialGrid g = build_grid(1, {64}, {{0.0, 1.0}});
  auto ops = assemble_operators(g);
  const NonlinearityBundle b = default_bundle();
  const ScalarField eta = ScalarField::Ones(g.n_nodes());
  const ScalarField theta = ScalarField::Constant(g.n_nodes(), 0.7);
  // F = 0 + integral G(1) + integral alpha(1) * gamma_eps(0)
  //   = 0 + 0 + 2 * 0.5 = 1 on the unit interval
  CHECK(kwc_energy(*ops, 0.5, b, eta, theta) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("energy of a linear profile matches midpoint quadrature") {
  const int m = 8;
  const SpatialGrid g = build_grid(1, {m}, {{0.0, 1.0}});
  auto ops = assemble_operators(g);
  const NonlinearityBundle b = default_bundle();
  ScalarField eta(g.n_nodes()), theta = ScalarField::Zero(g.n_nodes());
  for (int j = 0; j < g.n_nodes(); ++j) eta(j) = g.nodes(j, 0);
  // 1/2 int |eta'|^2 = 1/2; midpoint rule of G(x) = (x-1)^2/2 gives
  // 1/6 - h^2/24; the eps = 0 flux term vanishes with grad theta = 0.
  const double h = 1.0 / m;
  const double expected = 0.5 + 1.0 / 6.0 - h * h / 24.0;
  CHECK(kwc_energy(*ops, 0.0, b, eta, theta) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("box projection clamps componentwise and is idempotent") {
  const TimeGrid tg = make_time_grid(0.3, 0.1);
  const BoxConstraint box = uniform_box(tg, 4, -1.0, 1.0);
  ScalarTrajectory u;
  u.time = tg;
  u.vals.assign(4, ScalarField::Zero(4));
  u[0] << -2.0, 0.5, 3.0, -1.0;
  u[1] << 0.0, 1.0, -1.5, 2.5;
  u[2] << 0.25, -0.25, 0.75, -0.75;
  u[3] << 9.0, -9.0, 1.0001, -1.0001;
  const ScalarTrajectory p = project_box(box, u);
  CHECK(p[0](0) == doctest::Approx(-1.0));
  CHECK(p[0](1) == doctest::Approx(0.5));
  CHECK(p[0](2) == doctest::Approx(1.0));
  CHECK(p[3](0) == doctest::Approx(1.0));
  CHECK(p[3](1) == doctest::Approx(-1.0));
  CHECK(p[3](2) == doctest::Approx(1.0));
  CHECK(p[3](3) == doctest::Approx(-1.0));
  for (int i = 0; i <= 3; ++i) {
    CHECK((p[i].array() >= -1.0).all());
    CHECK((p[i].array() <= 1.0).all());
  }
  const ScalarTrajectory pp = project_box(box, p);
  for (int i = 0; i <= 3; ++i)
    CHECK((pp[i] - p[i]).cwiseAbs().maxCoeff() == 0.0);
}

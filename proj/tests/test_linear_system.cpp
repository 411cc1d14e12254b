#include <cmath>

#include "doctest.h"
#include "kwc/linear_pp.hpp"
#include "kwc/oracle.hpp"
#include "test_helpers.hpp"

using namespace kwc;
using kwtest::constant_septuplet;

TEST_CASE("step thresholds reproduce the printed examples") {
  const SpatialGrid g = build_grid(1, {8}, {{0.0, 1.0}});
  auto ops = assemble_operators(g);
  const TimeGrid tg = make_time_grid(1.0, 0.25);
  ProblemParams prm;
  prm.C_emb = 1.0;

  // all lower-order coefficients zero, a = 1: tau1 = 1/16, tau2 = 1/64
  const Septuplet zero = constant_septuplet(*ops, tg, 1.0, 0, 0, 0, 0, 0, 0);
  CHECK(tau1(zero, prm) == doctest::Approx(1.0 / 16.0).epsilon(1e-14));
  CHECK(tau2(zero, prm) == doctest::Approx(1.0 / 64.0).epsilon(1e-14));

  // a unit transport coefficient halves tau1
  const Septuplet drift = constant_septuplet(*ops, tg, 1.0, 0, 0, 0, 0, 1.0, 0);
  CHECK(tau1(drift, prm) == doctest::Approx(1.0 / 32.0).epsilon(1e-14));

  // the default embedding stand-in C_emb = 2 shrinks the denominator
  ProblemParams prm2;
  CHECK(prm2.C_emb == doctest::Approx(2.0));
  CHECK(tau1(zero, prm2) == doctest::Approx(1.0 / 40.0).epsilon(1e-14));
}

TEST_CASE("septuplet validation names broken membership") {
  const SpatialGrid g = build_grid(1, {4}, {{0.0, 1.0}});
  auto ops = assemble_operators(g);
  const TimeGrid tg = make_time_grid(0.2, 0.1);

  // a dips under delta_a
  {
    Septuplet s = constant_septuplet(*ops, tg, 1.0, 0, 0, 0, 0, 0, 0);
    s.a[1](2) = 0.5;
    CHECK_THROWS_AS(validate_septuplet(s, *ops), ConfigError);
  }
  // A with a negative eigenvalue
  {
    Septuplet s = constant_septuplet(*ops, tg, 1.0, 0, 0, 0, 0, 0, 0.1);
    s.A[1][2](0, 0) = -0.1;
    CHECK_THROWS_AS(validate_septuplet(s, *ops), ConfigError);
  }
  // asymmetric A (needs dim 2)
  {
    const SpatialGrid g2 = build_grid(2, {2, 2}, {{0.0, 1.0}, {0.0, 1.0}});
    auto ops2 = assemble_operators(g2);
    Septuplet s = constant_septuplet(*ops2, tg, 1.0, 0, 0, 0, 0, 0, 0.1);
    s.A[0][1](0, 1) = 0.05;  // breaks symmetry only
    CHECK_THROWS_AS(validate_septuplet(s, *ops2), ConfigError);
  }
  // mismatched trajectory lengths
  {
    Septuplet s = constant_septuplet(*ops, tg, 1.0, 0, 0, 0, 0, 0, 0);
    s.b.vals.pop_back();
    CHECK_THROWS_AS(validate_septuplet(s, *ops), ConfigError);
  }
}

TEST_CASE("the step guard rejects tau at the threshold and runs below it") {
  const SpatialGrid g = build_grid(1, {8}, {{0.0, 1.0}});
  auto ops = assemble_operators(g);
  const TimeGrid tg = make_time_grid(1.0, 0.25);
  const ProblemParams prm;  // C_emb = 2
  const Septuplet s = constant_septuplet(*ops, tg, 1.0, 0, 0, 0, 0, 0, 0);
  const double t1 = tau1(s, prm);
  const int nn = g.n_nodes();
  const ScalarField zero = ScalarField::Zero(nn);
  ScalarField p, z;
  CHECK_THROWS_AS(
      step_linear(*ops, prm, s, 1, t1, zero, zero, zero, zero, p, z),
      StepSizeError);
  CHECK_THROWS_AS(
      step_linear(*ops, prm, s, 1, -0.1, zero, zero, zero, zero, p, z),
      StepSizeError);
  CHECK_NOTHROW(
      step_linear(*ops, prm, s, 1, 0.99 * t1, zero, zero, zero, zero, p, z));
}

TEST_CASE("manufactured linear ramps are reproduced exactly") {
  const SpatialGrid g = build_grid(1, {16}, {{0.0, 1.0}});
  auto ops = assemble_operators(g);
  const TimeGrid tg = make_time_grid(0.1, 0.02);
  const ProblemParams prm;
  const Septuplet s = constant_septuplet(*ops, tg, 1.0, 0, 0, 0, 0, 0, 0);
  const int nn = g.n_nodes();

  // With only the principal parts active and K 1 = 0, forcing h = k = 1
  // moves constant fields along unit-slope ramps.
  const ScalarField p0 = ScalarField::Constant(nn, 2.0);
  const ScalarField z0 = ScalarField::Constant(nn, 3.0);
  LinearForcing f;
  f.h.time = tg;
  f.h.vals.assign(static_cast<size_t>(tg.n) + 1, ScalarField::Ones(nn));
  f.k = f.h;
  const LinearState st = solve_linear(*ops, prm, s, p0, z0, f);
  double dev = 0;
  for (int i = 0; i <= tg.n; ++i) {
    const double t = tg.node(i);
    dev = std::max(dev,
                   (st.p[i] - ScalarField::Constant(nn, 2.0 + t)).cwiseAbs().maxCoeff());
    dev = std::max(dev,
                   (st.z[i] - ScalarField::Constant(nn, 3.0 + t)).cwiseAbs().maxCoeff());
  }
  CHECK(dev <= 1e-12);

  const LinearForcing fb = residual_forcing(*ops, prm, s, st);
  double fdev = 0;
  for (int i = 1; i <= tg.n; ++i) {
    fdev = std::max(fdev, (fb.h[i] - f.h[i]).cwiseAbs().maxCoeff());
    fdev = std::max(fdev, (fb.k[i] - f.k[i]).cwiseAbs().maxCoeff());
  }
  // recovery multiplies solve roundoff by 1/tau, so allow that headroom
  CHECK(fdev <= 1e-9);
}

TEST_CASE("stability and boundedness reports accept an admissible march") {
  const SpatialGrid g = build_grid(1, {8}, {{0.0, 1.0}});
  auto ops = assemble_operators(g);
  const ProblemParams prm;
  const int nn = g.n_nodes();
  const TimeGrid probe = make_time_grid(1.0, 0.01);
  const Septuplet sp =
      constant_septuplet(*ops, probe, 1.1, 0.05, 0.02, 0.1, 0.05, 0.1, 0.05);
  const double run_tau = 0.9 * tau2(sp, prm);
  const TimeGrid tg = make_time_grid(1.0, run_tau);
  const Septuplet s =
      constant_septuplet(*ops, tg, 1.1, 0.05, 0.02, 0.1, 0.05, 0.1, 0.05);
  REQUIRE(tg.tau < tau2(s, prm));

  ScalarField p0(nn), z0(nn);
  for (int j = 0; j < nn; ++j) {
    const double x = g.nodes(j, 0);
    p0(j) = 0.3 * std::sin(3.0 * x) + 0.1;
    z0(j) = 0.2 * std::cos(2.0 * x);
  }
  LinearForcing f;
  f.h.time = tg;
  f.h.vals.resize(static_cast<size_t>(tg.n) + 1);
  f.k.time = tg;
  f.k.vals.resize(static_cast<size_t>(tg.n) + 1);
  for (int i = 0; i <= tg.n; ++i) {
    f.h[i] = ScalarField::Constant(nn, std::cos(tg.node(i)));
    f.k[i] = ScalarField::Constant(nn, 0.5 * std::sin(2.0 * tg.node(i)));
  }
  const LinearState st = solve_linear(*ops, prm, s, p0, z0, f);
  const StabilityReport rep = stability_check(*ops, prm, s, st, f);
  CHECK(rep.pass);
  CHECK(rep.est1_min_slack >= -1e-9);
  CHECK(rep.est2_slack >= -1e-9);
  CHECK(rep.est3_slack >= -1e-9);
  CHECK(rep.C1 > 0);
  CHECK(rep.C2 > 0);

  const BoundednessReport bd = boundedness_check(*ops, prm, s, st, f, p0, z0);
  CHECK(bd.upper_ok);
  CHECK(bd.M0 < bd.M1);
  CHECK(bd.solution_norm > 0);
}

TEST_CASE("the space-time oracle matches the marching solver") {
  const SpatialGrid g = build_grid(1, {8}, {{0.0, 1.0}});
  auto ops = assemble_operators(g);
  const ProblemParams prm;
  const TimeGrid tg = make_time_grid(0.04, 0.01);
  const Septuplet s =
      constant_septuplet(*ops, tg, 1.1, 0.05, 0.03, 0.2, 0.1, 0.05, 0.02);
  const int nn = g.n_nodes();
  ScalarField p0(nn), z0(nn);
  for (int j = 0; j < nn; ++j) {
    const double x = g.nodes(j, 0);
    p0(j) = std::sin(kwtest::kPi * x);
    z0(j) = x;
  }
  LinearForcing f;
  f.h.time = tg;
  f.h.vals.resize(static_cast<size_t>(tg.n) + 1);
  f.k.time = tg;
  f.k.vals.resize(static_cast<size_t>(tg.n) + 1);
  for (int i = 0; i <= tg.n; ++i) {
    f.h[i] = ScalarField::Constant(nn, 1.0 + tg.node(i));
    for (int j = 0; j < nn; ++j)
      f.h[i](j) *= std::cos(2.0 * kwtest::kPi * g.nodes(j, 0));
    f.k[i] = ScalarField::Constant(nn, 0.3 - tg.node(i));
  }

  const SpacetimeSystem sys = assemble_spacetime(*ops, prm, s, p0, z0, f);
  REQUIRE(sys.n_nodes == nn);
  REQUIRE(sys.n_steps == tg.n);
  REQUIRE(sys.A.rows() == 2 * nn * tg.n);
  const Eigen::VectorXd x = sys.A.partialPivLu().solve(sys.rhs);
  const LinearState st = solve_linear(*ops, prm, s, p0, z0, f);
  double dev = 0;
  for (int i = 1; i <= tg.n; ++i) {
    const int base = 2 * nn * (i - 1);
    for (int j = 0; j < nn; ++j) {
      dev = std::max(dev, std::abs(st.p[i](j) - x(base + j)));
      dev = std::max(dev, std::abs(st.z[i](j) - x(base + nn + j)));
    }
  }
  CHECK(dev <= 1e-10 * (1.0 + x.cwiseAbs().maxCoeff()));
}

TEST_CASE("the space-time oracle refuses desk-scale overruns") {
  const ProblemParams prm;
  // too many nodes
  {
    const SpatialGrid g = build_grid(1, {16}, {{0.0, 1.0}});
    auto ops = assemble_operators(g);
    const TimeGrid tg = make_time_grid(0.04, 0.01);
    const Septuplet s = constant_septuplet(*ops, tg, 1.0, 0, 0, 0, 0, 0, 0);
    const int nn = g.n_nodes();
    LinearForcing f;
    f.h.time = tg;
    f.h.vals.assign(static_cast<size_t>(tg.n) + 1, ScalarField::Zero(nn));
    f.k = f.h;
    CHECK_THROWS_AS(assemble_spacetime(*ops, prm, s, ScalarField::Zero(nn),
                                       ScalarField::Zero(nn), f),
                    ConfigError);
  }
  // too many steps
  {
    const SpatialGrid g = build_grid(1, {8}, {{0.0, 1.0}});
    auto ops = assemble_operators(g);
    const TimeGrid tg = make_time_grid(0.09, 0.01);
    const Septuplet s = constant_septuplet(*ops, tg, 1.0, 0, 0, 0, 0, 0, 0);
    const int nn = g.n_nodes();
    LinearForcing f;
    f.h.time = tg;
    f.h.vals.assign(static_cast<size_t>(tg.n) + 1, ScalarField::Zero(nn));
    f.k = f.h;
    CHECK_THROWS_AS(assemble_spacetime(*ops, prm, s, ScalarField::Zero(nn),
                                       ScalarField::Zero(nn), f),
                    ConfigError);
  }
}

TEST_CASE("identical inputs give a zero Gronwall gap") {
  const SpatialGrid g = build_grid(1, {8}, {{0.0, 1.0}});
  auto ops = assemble_operators(g);
  const ProblemParams prm;
  const TimeGrid probe = make_time_grid(0.5, 0.01);
  const Septuplet sp =
      constant_septuplet(*ops, probe, 1.0, 0.05, 0.02, 0.1, 0.05, 0.1, 0.05);
  const double run_tau = 0.45 * tau1(sp, prm);
  const TimeGrid tg = make_time_grid(0.5, run_tau);
  const Septuplet s =
      constant_septuplet(*ops, tg, 1.0, 0.05, 0.02, 0.1, 0.05, 0.1, 0.05);
  REQUIRE(tg.tau < tau1(s, prm));
  const int nn = g.n_nodes();
  ScalarField p0(nn), z0(nn);
  for (int j = 0; j < nn; ++j) {
    p0(j) = 0.2 * g.nodes(j, 0);
    z0(j) = 0.1 - 0.3 * g.nodes(j, 0);
  }
  LinearForcing f;
  f.h.time = tg;
  f.h.vals.assign(static_cast<size_t>(tg.n) + 1, ScalarField::Constant(nn, 0.4));
  f.k = f.h;
  const LinearState st = solve_linear(*ops, prm, s, p0, z0, f);
  const GronwallDiagnostic gd =
      gronwall_diagnostic(*ops, prm, s, s, st, st, f, f);
  CHECK(gd.pass);
  CHECK(gd.max_rel_violation <= 0.0);
  for (double Ji : gd.J) CHECK(Ji == 0.0);
}

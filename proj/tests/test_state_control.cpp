#include <cmath>

#include "doctest.h"
#include "kwc/control.hpp"
#include "kwc/box.hpp"
#include "kwc/oracle.hpp"
#include "test_helpers.hpp"

using namespace kwc;
using kwtest::reference_instance;

TEST_CASE("a balanced constant pair is a fixed point of the stepper") {
  const SpatialGrid g = build_grid(1, {16}, {{0.0, 1.0}});
  auto ops = assemble_operators(g);
  StateInstance inst;
  inst.tg = make_time_grid(0.2, 0.05);
  inst.params = ProblemParams{};
  inst.params.eps = 0.5;
  inst.bundle = default_bundle();
  const int nn = g.n_nodes();
  inst.eta0 = ScalarField::Constant(nn, 2.0);
  inst.theta0 = ScalarField::Constant(nn, 0.7);
  const double ustar =
      inst.bundle.g(2.0) + inst.bundle.alphap(2.0) * inst.params.eps;
  const ScalarField u_field = ScalarField::Constant(nn, ustar);
  const ScalarField v_field = ScalarField::Zero(nn);
  inst.u = constant_trajectory(inst.tg, u_field);
  inst.v = constant_trajectory(inst.tg, v_field);
  inst.eta_ad = ScalarField::Zero(nn);
  inst.theta_ad = ScalarField::Zero(nn);
  const StateTrajectory st = solve_state(*ops, inst);
  double dev = 0;
  for (int i = 0; i <= inst.tg.n; ++i) {
    dev = std::max(dev, (st.eta[i] - inst.eta0).cwiseAbs().maxCoeff());
    dev = std::max(dev, (st.theta[i] - inst.theta0).cwiseAbs().maxCoeff());
  }
  CHECK(dev <= 1e-10);
}

TEST_CASE("uncontrolled evolution dissipates the regularized energy") {
  const SpatialGrid g = build_grid(1, {32}, {{0.0, 1.0}});
  auto ops = assemble_operators(g);
  const StateInstance inst = reference_instance(*ops, 0.5, 5e-3, 0.5, false);
  const StateTrajectory st = solve_state(*ops, inst);
  REQUIRE(st.energy.size() == static_cast<size_t>(inst.tg.n) + 1);
  const double allow = 1e-8 * (1.0 + st.energy.front());
  for (size_t i = 1; i < st.energy.size(); ++i)
    CHECK(st.energy[i] - st.energy[i - 1] <= allow);
  CHECK(st.energy.back() < st.energy.front());
}

TEST_CASE("state endpoint converges at first order in the step") {
  const SpatialGrid g = build_grid(1, {16}, {{0.0, 1.0}});
  auto ops = assemble_operators(g);
  auto endpoint = [&](double tau) {
    const StateInstance inst = reference_instance(*ops, 0.2, tau, 0.5, false);
    const StateTrajectory st = solve_state(*ops, inst);
    return std::make_pair(st.eta[inst.tg.n], st.theta[inst.tg.n]);
  };
  const auto c = endpoint(0.01);
  const auto m = endpoint(0.005);
  const auto f = endpoint(0.0025);
  const double d1 = norm_H(*ops, ScalarField(c.first - m.first)) +
                    norm_H(*ops, ScalarField(c.second - m.second));
  const double d2 = norm_H(*ops, ScalarField(m.first - f.first)) +
                    norm_H(*ops, ScalarField(m.second - f.second));
  const double order = std::log2(d1 / d2);
  CHECK(order > 0.75);
  CHECK(order < 1.35);
}

TEST_CASE("cost drops when the target is the endpoint held in time") {
  const SpatialGrid g = build_grid(1, {32}, {{0.0, 1.0}});
  auto ops = assemble_operators(g);
  const StateInstance inst = reference_instance(*ops, 0.5, 0.01, 0.5, true);
  const BoxConstraint box = uniform_box(inst.tg, g.n_nodes(), -1.0, 1.0);
  OcpOptions opts;
  opts.tol = 1e-5;
  const OcpReport rep = solve_ocp(*ops, inst, box, opts);
  CHECK(rep.converged);
  REQUIRE(rep.history.size() >= 2);
  CHECK(rep.final_cost < rep.history.front().J);
  for (size_t i = 1; i < rep.history.size(); ++i)
    CHECK(rep.history[i].J <= rep.history[i - 1].J + 1e-12);
  const OptimalityResiduals res =
      optimality_residuals(*ops, inst, box, rep.u, rep.v, rep.adjoint);
  CHECK(res.fixed_point <= 1e-5);
  CHECK(res.vstat <= 1e-5);
  CHECK(res.vi_min >= -1e-4);
}

TEST_CASE("forward and adjoint pairings agree to first order") {
  const SpatialGrid g = build_grid(1, {32}, {{0.0, 1.0}});
  auto ops = assemble_operators(g);
  const StateInstance inst = reference_instance(*ops, 0.5, 8e-3, 0.5, false);
  const StateTrajectory st = solve_state(*ops, inst);
  const TimeGrid tg = inst.tg;
  auto traj = [&](auto fn) {
    ScalarTrajectory w;
    w.time = tg;
    w.vals.resize(static_cast<size_t>(tg.n) + 1);
    for (int i = 0; i <= tg.n; ++i) {
      w[i].resize(g.n_nodes());
      for (int j = 0; j < g.n_nodes(); ++j)
        w[i](j) = fn(tg.node(i), g.nodes(j, 0));
    }
    return w;
  };
  const ScalarTrajectory f_u = traj([](double t, double x) {
    return std::sin(kwtest::kPi * x) * (1.0 - 0.4 * t);
  });
  const ScalarTrajectory f_v =
      traj([](double t, double x) { return (0.3 + x) * std::cos(t); });
  const ScalarTrajectory h =
      traj([](double t, double x) { return std::cos(kwtest::kPi * x) + 0.2 * t; });
  const ScalarTrajectory k =
      traj([](double t, double x) { return x * (1.0 - x) * (1.0 + t); });
  const ConjugacyResult cr = check_conjugacy(*ops, inst, st, f_u, f_v, h, k);
  CHECK(std::abs(cr.gap()) <= 0.05 * cr.scale());
}

TEST_CASE("the adjoint gradient tracks finite differences") {
  const SpatialGrid g = build_grid(1, {16}, {{0.0, 1.0}});
  auto ops = assemble_operators(g);
  const StateInstance inst = reference_instance(*ops, 0.5, 0.01, 0.5, true);
  const StateTrajectory st = solve_state(*ops, inst);
  const LinearState adj = solve_adjoint(*ops, inst, st);
  const TimeGrid tg = inst.tg;
  ScalarTrajectory du, dv;
  du.time = dv.time = tg;
  du.vals.resize(static_cast<size_t>(tg.n) + 1);
  dv.vals.resize(static_cast<size_t>(tg.n) + 1);
  for (int i = 0; i <= tg.n; ++i) {
    du[i].resize(g.n_nodes());
    dv[i].resize(g.n_nodes());
    const double t = tg.node(i);
    for (int j = 0; j < g.n_nodes(); ++j) {
      const double x = g.nodes(j, 0);
      du[i](j) = std::sin(kwtest::kPi * x) * (1.0 - 0.5 * t);
      dv[i](j) = 0.5 * std::cos(kwtest::kPi * x) * (0.5 + t);
    }
  }
  const double pred = cost_directional(*ops, inst, adj, du, dv);
  const FdGradient fd = fd_gradient(*ops, inst, du, dv, 1e-4);
  const double rel = std::abs(pred - fd.extrapolated) /
                     std::max(std::abs(fd.extrapolated), 1e-300);
  CHECK(rel <= 0.05);
  CHECK(fd.spread <= 0.1 * std::max(std::abs(fd.extrapolated), 1e-300));
}

TEST_CASE("adjoint and linearized septuplets live in the right class") {
  const SpatialGrid g = build_grid(1, {16}, {{0.0, 1.0}});
  auto ops = assemble_operators(g);
  const StateInstance inst = reference_instance(*ops, 0.5, 0.01, 0.5, false);
  const StateTrajectory st = solve_state(*ops, inst);
  Septuplet lin = build_linearized_septuplet(*ops, inst.params, inst.bundle, st);
  Septuplet adj = build_adjoint_septuplet(*ops, inst.params, inst.bundle, st);
  // re-validation must succeed (class membership) and the linearized
  // drift/damping slots pinned to zero stay zero
  CHECK_NOTHROW(validate_septuplet(lin, *ops));
  CHECK_NOTHROW(validate_septuplet(adj, *ops));
  CHECK(lin.xi_Hs == 0.0);
  for (int i = 0; i <= inst.tg.n; ++i) {
    CHECK(lin.b[i].cwiseAbs().maxCoeff() == 0.0);
    CHECK(adj.c[i].cwiseAbs().maxCoeff() == 0.0);
  }
  // adjoint 'a' is the time reversal of alpha0(eta)
  const int n = inst.tg.n;
  for (int i = 0; i <= n; ++i) {
    ScalarField expect(g.n_nodes());
    for (int j = 0; j < g.n_nodes(); ++j)
      expect(j) = inst.bundle.alpha0(st.eta[n - i](j));
    CHECK((adj.a[i] - expect).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

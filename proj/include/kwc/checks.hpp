#pragma once

#include <map>
#include <string>
#include <vector>

#include "kwc/control.hpp"

namespace kwc {

/// Result of one verification suite. metrics hold deterministic numbers
/// only (no timings), so emitted reports are byte-stable across runs.
struct CheckResult {
  std::string name;
  bool passed = false;
  std::map<std::string, double> metrics;
  std::vector<std::string> notes;
};

/// Registered suite names, in canonical execution order:
///   kernel-bounds, stationary-exactness, energy-dissipation,
///   step-guard-stability, forcing-round-trip, adjoint-conjugacy,
///   gradient-check, optimality-system, eps-continuation,
///   gronwall-bound, determinism.
std::vector<std::string> check_names();

/// Runs one suite by name (ConfigError on unknown names).
CheckResult run_check(const std::string& name);

/// Runs the given suites (all, in canonical order, if empty).
std::vector<CheckResult> run_checks(const std::vector<std::string>& names = {});

}  // namespace kwc

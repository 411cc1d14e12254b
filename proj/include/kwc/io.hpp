#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "kwc/checks.hpp"

namespace kwc {

/// Shortest round-trip decimal form of a double ("nan"/"inf"/"-inf"
/// for non-finite values). All emitted numbers go through this, so a
/// rerun of the same computation produces byte-identical artifacts.
std::string format_double(double x);

/// Parsed and validated run configuration (single JSON file).
struct RunConfig {
  // grid
  int dim = 1;
  std::vector<int> resolution{64};
  std::vector<std::array<double, 2>> extents{{0.0, 1.0}};
  // time (the default step stays below the admissibility threshold of the
  // adjoint septuplets that solve-ocp generates under the default params)
  double T = 1.0;
  double tau = 2e-3;
  // physics + cost
  ProblemParams params;
  std::string bundle_name = "default";
  // tabulated bundle samples (used when bundle_name == "tabulated")
  std::vector<double> tab_eta, tab_G, tab_alpha0, tab_alpha;
  double tab_delta_star = 1.0;
  // fields
  std::string eta0_spec = "sine:off=0.5,amp=0.25", theta0_spec = "parabola";
  std::string eta_ad_spec = "uncontrolled-endpoint";
  std::string theta_ad_spec = "uncontrolled-endpoint";
  // box
  double box_lower = -1.0, box_upper = 1.0;
  // optimizer
  OcpOptions ocp;
  // sweep
  std::vector<double> eps_list{0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625};
  // check
  std::vector<std::string> suites;  // empty = all
  // misc
  unsigned seed = 20260822;
  std::string out_dir = "out";
};

/// Loads a config file; throws ConfigError with a message naming the
/// offending key on any violation.
RunConfig load_config(const std::filesystem::path& file);

/// Builds the instance a config describes (resolves field specs;
/// "uncontrolled-endpoint" targets trigger one zero-control solve).
StateInstance build_instance(const DiscreteOperators& ops, const RunConfig& cfg);

SpatialGrid grid_from_config(const RunConfig& cfg);
BoxConstraint box_from_config(const RunConfig& cfg, const TimeGrid& tg, int n_nodes);

/// Executes one CLI subcommand (solve-state | solve-ocp | gradcheck |
/// eps-sweep | check) into cfg.out_dir, writing meta.json plus the
/// subcommand's artifacts. Returns the process exit code contract:
/// 0 success, 1 check failure, 2 config error, 3 solver failure.
int run_subcommand(const std::string& cmd, const RunConfig& cfg);

/// Writes the error-record meta.json for a config that failed to load
/// (so even a malformed config leaves a machine-readable trace) and
/// returns the config-error exit code.
int emit_config_error(const std::string& cmd, const std::string& out_dir,
                      const std::string& message);

}  // namespace kwc

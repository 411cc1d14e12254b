#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kwc/grid.hpp"
#include "kwc/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Phase-field optimal control toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  const std::vector<std::pair<std::string, std::string>> cmds = {
      {"solve-state", "integrate the state system and emit fields + energy"},
      {"solve-ocp", "run projected gradient descent on the control problem"},
      {"gradcheck", "compare the adjoint gradient against finite differences"},
      {"eps-sweep", "warm-started continuation over the regularization list"},
      {"check", "run the property suites"}};
  for (const auto& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.first, c.second);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_override,
                    "output directory (overrides the config's out_dir)");
  }
  CLI11_PARSE(app, argc, argv);

  const std::string cmd = app.get_subcommands().front()->get_name();
  kwc::RunConfig cfg;
  try {
    cfg = kwc::load_config(config_path);
  } catch (const kwc::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kwc::emit_config_error(
        cmd, out_override.empty() ? "out" : out_override, e.what());
  }
  if (!out_override.empty()) cfg.out_dir = out_override;
  const int code = kwc::run_subcommand(cmd, cfg);
  if (code != 0)
    std::fprintf(stderr, "%s failed with exit code %d\n", cmd.c_str(), code);
  return code;
}

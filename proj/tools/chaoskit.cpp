#include <CLI11.hpp>
#include <cstdio>
#include <exception>

#include "chaoskit/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"chaoskit: interacting-diffusion and mean-field limit toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "execute an experiment config");
  run_cmd->add_option("config", config_path, "key=value config file")
      ->required();

  auto* check_cmd =
      app.add_subcommand("check", "validate a config without running it");
  check_cmd->add_option("config", config_path, "key=value config file")
      ->required();

  double a_min = 1e-4, a_max = 2e-3, eps = 0.0;
  int steps = 25, dim = 1;
  std::string output_dir = "out/frontier";
  auto* frontier_cmd =
      app.add_subcommand("frontier", "sweep the contraction constants in a");
  frontier_cmd->add_option("--a-min", a_min, "smallest well depth")
      ->required();
  frontier_cmd->add_option("--a-max", a_max, "largest well depth")
      ->required();
  frontier_cmd->add_option("--steps", steps, "sweep points (default 25)");
  frontier_cmd->add_option("--eps", eps, "interaction strength (default 0)");
  frontier_cmd->add_option("--dim", dim, "space dimension (default 1)");
  frontier_cmd->add_option("--output", output_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const auto cfg = chaoskit::experiments::load_config(config_path);
      const int status = chaoskit::experiments::run(cfg);
      std::fprintf(
          stdout, "%s: %s (outputs in %s)\n",
          chaoskit::experiments::experiment_name(cfg.experiment).c_str(),
          status == 0 ? "pass" : "FAIL", cfg.output_dir.c_str());
      return status;
    }
    if (check_cmd->parsed()) {
      const auto cfg = chaoskit::experiments::load_config(config_path);
      std::fprintf(
          stdout, "config ok: experiment=%s output_dir=%s\n",
          chaoskit::experiments::experiment_name(cfg.experiment).c_str(),
          cfg.output_dir.c_str());
      return 0;
    }
    return chaoskit::experiments::frontier(a_min, a_max, steps, eps, dim,
                                           output_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

// cellsearch: misdetection experiments for directional cell discovery.

#include <iostream>

#include <CLI11.hpp>

#include "cellsearch/commands.hpp"

int main(int argc, char** argv) {
  using namespace cellsearch;

  CLI::App app{"Directional mmWave cell search simulator"};
  app.require_subcommand(1);
  RunRequest req;
  std::string config, out_dir = "results", calib_dir;
  std::uint64_t seed = 0;
  long trials = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON config file");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "experiment seed");
    sub->add_option("--trials", trials, "trials per SNR point");
    sub->add_option("--threads", req.threads, "worker threads (0 = OpenMP default)");
    sub->add_option("--override", req.overrides, "dotted key=value, repeatable");
    sub->add_option("--calib-dir", calib_dir, "calibration cache directory (default $SIM_CALIB_DIR)");
  };

  auto* run = app.add_subcommand("run", "run every scenario of a config");
  common(run);
  auto* calibrate = app.add_subcommand("calibrate", "compute and cache detection thresholds");
  common(calibrate);
  auto* figures = app.add_subcommand("figures", "run one of the canonical figure bundles");
  common(figures);
  figures->add_option("--which", req.which, "figure id: 3, 4, 5 or 6");
  auto* validate = app.add_subcommand("validate", "fast invariant checks");
  common(validate);
  validate->add_flag("--inject-fault", req.inject_fault, "corrupt one check (test hook)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (!config.empty()) req.config_path = config;
  req.output_dir = out_dir;
  if (!calib_dir.empty()) req.calib_dir = calib_dir;
  if (app.got_subcommand(run) || app.got_subcommand(calibrate) || app.got_subcommand(figures) ||
      app.got_subcommand(validate)) {
    for (auto* sub : {run, calibrate, figures, validate}) {
      if (!app.got_subcommand(sub)) continue;
      if (sub->count("--seed")) req.seed = seed;
      if (sub->count("--trials")) req.trials = trials;
    }
  }

  if (app.got_subcommand(run)) return cmd_run(req, std::cout, std::cerr);
  if (app.got_subcommand(calibrate)) return cmd_calibrate(req, std::cout, std::cerr);
  if (app.got_subcommand(figures)) return cmd_figures(req, std::cout, std::cerr);
  return cmd_validate(req, std::cout, std::cerr);
}

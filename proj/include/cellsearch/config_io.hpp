#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cellsearch/glrt_detector.hpp"
#include "cellsearch/scenario.hpp"

namespace cellsearch {

/// Fully resolved experiment: the merged config tree plus typed views.
struct ExperimentConfig {
  nlohmann::json resolved;
  std::vector<std::string> overrides;
  Scenario base;
  std::vector<Scenario> scenarios;  // `base` alone when the file lists none
  double r_fa = 0.01;
  double p_fa_override = 0.0;  // > 0 replaces the budgeted P_FA
  FrequencyUncertainty freq;
  std::vector<double> snr_grid_db;
  long trials = 2000;
  long calib_trials = 50000;
  std::uint64_t seed = 1;
  int stop_after_zero = 0;
  double rate_target_bps = 10e6;
  double rate_beta = 0.4;

  double p_fa() const;  // budgeted or overridden per-hypothesis rate
};

nlohmann::json default_config_json();

/// Sets one dotted key (`frontend.bits=3`). The value is read as JSON when
/// it parses, otherwise as a string. Unknown keys throw ConfigError.
void apply_override(nlohmann::json& root, const std::string& assignment);

ExperimentConfig resolve_config(const nlohmann::json& file_tree,
                                const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});

// Typed scenario from a merged tree (no `scenarios` entry needed).
Scenario scenario_from_json(const nlohmann::json& tree, std::string id);

std::vector<double> snr_grid(double start, double stop, double step);

}  // namespace cellsearch

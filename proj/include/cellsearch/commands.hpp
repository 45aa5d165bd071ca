#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cellsearch {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitConfig = 2,
  kExitCalibration = 3,
  kExitRuntime = 4,
};

struct RunRequest {
  std::optional<std::filesystem::path> config_path;
  std::filesystem::path output_dir = "results";
  std::optional<std::uint64_t> seed;
  std::optional<long> trials;
  int threads = 0;
  std::vector<std::string> overrides;
  int which = 3;
  bool inject_fault = false;  // validate only: corrupts one check on purpose
  std::optional<std::filesystem::path> calib_dir;  // default: SIM_CALIB_DIR, then <out>/calibration
};

int cmd_run(const RunRequest& req, std::ostream& out, std::ostream& err);
int cmd_calibrate(const RunRequest& req, std::ostream& out, std::ostream& err);
int cmd_figures(const RunRequest& req, std::ostream& out, std::ostream& err);
int cmd_validate(const RunRequest& req, std::ostream& out, std::ostream& err);

}  // namespace cellsearch

#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cellsearch/glrt_detector.hpp"
#include "cellsearch/pss_signal.hpp"
#include "cellsearch/rx_frontend.hpp"

namespace cellsearch {

struct FalseAlarmBudget {
  double r_fa = 0.01;  // false alarms per search period
  long n_dly = 0;
  int n_fo = 0;
  int n_pss = 0;
  long n_hyp = 0;
  double p_fa = 0.0;   // per hypothesis
};

FalseAlarmBudget fa_budget(double r_fa, const PssConfig& cfg, const FrequencyUncertainty& fu = {});

/// Quadratic model log Pr(T >= t) ~ a t^2 + b t + c over the fitted tail.
struct TailFit {
  double a = 0.0, b = 0.0, c = 0.0;
  double t_lo = 0.0, t_hi = 0.0;  // fitted region
  int n_points = 0;
};

struct TailFitOptions {
  double fraction = 0.10;
  int min_points = 500;
};

// `sorted` must be ascending. Points are the unique order statistics of the
// top fraction with empirical survival (#samples >= t) / n.
TailFit fit_log_survival(const std::vector<double>& sorted, const TailFitOptions& opt = {});

/// Larger root of a t^2 + b t + c = log(p_fa). Throws CalibrationError if the
/// tail is not concave, has no real root, or the root leaves (0, 1).
double solve_threshold(const TailFit& fit, double p_fa);

/// Everything the null distribution of T depends on, plus the budget and
/// sampling choices that produced the threshold.
struct CalibrationKey {
  FrontendKind kind = FrontendKind::digital;
  int n_rx = 16;
  int n_dim = 1024;
  int n_slot = 50;
  int n_sig = 4;
  int n_streams = 1;
  int bits = 0;
  QuantizerMode quantizer = QuantizerMode::surrogate;
  double agc_backoff_db = 0.0;
  ArrayGeometry ue;
  ElevationSampling sampling = ElevationSampling::sphere;
  double p_fa = 0.0;
  long n_trials = 0;
  std::uint64_t seed = 0;

  std::string id() const;  // stable text form, also the cache file stem
  nlohmann::json to_json() const;
  friend bool operator==(const CalibrationKey&, const CalibrationKey&) = default;
};

struct ThresholdModel {
  CalibrationKey key;
  TailFit fit;
  double t_star = 0.0;
  double empirical_max = 0.0;
  std::vector<double> samples;  // sorted H0 statistics; not persisted

  nlohmann::json to_json() const;
  static ThresholdModel from_json(const nlohmann::json& j);
};

ThresholdModel threshold_from_samples(CalibrationKey key, std::vector<double> samples,
                                      const TailFitOptions& opt = {});

/// Directory of JSON threshold files, one per key. Access is serialized.
class CalibrationCache {
 public:
  explicit CalibrationCache(std::filesystem::path dir);

  std::optional<ThresholdModel> load(const CalibrationKey& key) const;
  void store(const ThresholdModel& model) const;
  std::filesystem::path path_for(const CalibrationKey& key) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
};

}  // namespace cellsearch

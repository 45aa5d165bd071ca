#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cellsearch/kernels.hpp"
#include "cellsearch/threshold_calibration.hpp"

namespace cellsearch {

/// T_sig W_tot / (N_sig G_tx G_rx), the factor from data SNR to PSS SNR,
/// with the gains equal to the element counts.
double snr_conversion_factor(const PssConfig& cfg, const ArrayGeometry& bs, const ArrayGeometry& ue);
double snr_convert(double snr_data, const PssConfig& cfg, const ArrayGeometry& bs, const ArrayGeometry& ue);
double snr_unconvert(double snr_pss, const PssConfig& cfg, const ArrayGeometry& bs, const ArrayGeometry& ue);

// Data SNR at which beta W_tot log2(1 + SNR) reaches the target rate.
double rate_target_snr(double rate_bps, double w_tot_hz, double beta);

double db_to_linear(double db);
double linear_to_db(double x);

struct SnrPoint {
  double snr_data_db = 0.0;
  double snr_pss_db = 0.0;
  double noise_psd = 1.0;
  double power = 0.0;  // received PSS power per sub-signal, nu SNR_PSS

  // Scale applied to the unit-normalized channel: sqrt(P N_rx N_tx).
  double amplitude(int n_rx, int n_tx) const;
};

SnrPoint make_snr_point(double snr_data_db, const Scenario& s);

struct CurvePoint {
  double snr_data_db = 0.0;
  double snr_pss_db = 0.0;
  long n_trials = 0;
  long n_missed = 0;
  double p_md = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

// Wilson score interval, 95% by default.
std::pair<double, double> wilson_interval(long successes, long n, double z = 1.959963984540054);

struct ExecOptions {
  std::uint64_t seed = 1;
  int threads = 0;        // 0: OpenMP default
  bool parallel = true;   // false: serial reference kernel
};

CurvePoint run_point(const TrialKernel& kernel, const SnrPoint& point, std::uint64_t point_index,
                     long n_trials, std::optional<double> threshold, const ExecOptions& exec);

struct CalibrationOptions {
  long n_trials = 50000;
  double p_fa = 1.4493e-8;
  std::uint64_t seed = 1;
};

CalibrationKey calibration_key(const Scenario& s, const CalibrationOptions& opt);

/// Null statistics of the scenario's detector, tail fit and threshold.
/// Loaded from / stored to `cache` when given.
ThresholdModel calibrate(const TrialKernel& kernel, const CalibrationOptions& opt,
                         const ExecOptions& exec, const CalibrationCache* cache = nullptr);

struct Curve {
  std::string scenario_id;
  ThresholdModel threshold;
  std::vector<CurvePoint> points;
  std::vector<std::string> diagnostics;  // monotonicity violations beyond CI overlap
};

struct CurveOptions {
  long n_trials = 2000;
  int stop_after_zero = 0;  // stop once this many consecutive points have p_md = 0; 0 = never
};

Curve run_curve(const TrialKernel& kernel, const std::vector<double>& snr_grid_db,
                const CurveOptions& opt, const CalibrationOptions& calib, const ExecOptions& exec,
                const CalibrationCache* cache = nullptr);

/// Data SNR where p_md first falls through `target`, by interpolating
/// log p_md linearly in dB. Zero counts are floored at half a miss.
std::optional<double> crossing_snr_db(const std::vector<CurvePoint>& points, double target = 0.01);

std::vector<std::string> monotonicity_diagnostics(const std::vector<CurvePoint>& points);

void write_curves_csv(const std::filesystem::path& path, const std::vector<Curve>& curves);

}  // namespace cellsearch

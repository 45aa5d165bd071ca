#include "cellsearch/harness.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cellsearch/errors.hpp"

namespace cellsearch {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double x) { return 10.0 * std::log10(x); }

double snr_conversion_factor(const PssConfig& cfg, const ArrayGeometry& bs, const ArrayGeometry& ue) {
  return cfg.t_sig_s * cfg.w_tot_hz / (cfg.n_sig * max_bf_gain(bs) * max_bf_gain(ue));
}

double snr_convert(double snr_data, const PssConfig& cfg, const ArrayGeometry& bs, const ArrayGeometry& ue) {
  return snr_data * snr_conversion_factor(cfg, bs, ue);
}

double snr_unconvert(double snr_pss, const PssConfig& cfg, const ArrayGeometry& bs, const ArrayGeometry& ue) {
  return snr_pss / snr_conversion_factor(cfg, bs, ue);
}

double rate_target_snr(double rate_bps, double w_tot_hz, double beta) {
  return std::exp2(rate_bps / (beta * w_tot_hz)) - 1.0;
}

double SnrPoint::amplitude(int n_rx, int n_tx) const {
  return std::sqrt(power * n_rx * n_tx);
}

SnrPoint make_snr_point(double snr_data_db, const Scenario& s) {
  SnrPoint p;
  p.snr_data_db = snr_data_db;
  const double pss = snr_convert(db_to_linear(snr_data_db), s.pss, s.bs, s.ue);
  p.snr_pss_db = linear_to_db(pss);
  p.noise_psd = 1.0;
  p.power = pss * p.noise_psd;
  return p;
}

std::pair<double, double> wilson_interval(long successes, long n, double z) {
  if (n <= 0) return {0.0, 1.0};
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  // The bounds are exact at the ends; the formula leaves rounding residue.
  const double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = successes == n ? 1.0 : std::min(1.0, centre + half);
  return {lo, hi};
}

CurvePoint run_point(const TrialKernel& kernel, const SnrPoint& point, std::uint64_t point_index,
                     long n_trials, std::optional<double> threshold, const ExecOptions& exec) {
  if (!threshold) throw CalibrationError("no calibrated threshold for scenario " + kernel.scenario().id);
  TrialBatch batch;
  batch.seed = exec.seed;
  batch.stream = stable_hash(kernel.scenario().id);
  batch.point = point_index;
  batch.amplitude = point.amplitude(kernel.scenario().ue.size(), kernel.scenario().bs.size());
  batch.n_trials = n_trials;
  const std::vector<double> T = exec.parallel ? run_trials_parallel(kernel, batch, exec.threads)
                                              : run_trials_serial(kernel, batch);
  CurvePoint c;
  c.snr_data_db = point.snr_data_db;
  c.snr_pss_db = point.snr_pss_db;
  c.n_trials = n_trials;
  for (double t : T) c.n_missed += t < *threshold ? 1 : 0;
  c.p_md = n_trials > 0 ? static_cast<double>(c.n_missed) / n_trials : 0.0;
  std::tie(c.ci_lo, c.ci_hi) = wilson_interval(c.n_missed, n_trials);
  return c;
}

CalibrationKey calibration_key(const Scenario& s, const CalibrationOptions& opt) {
  CalibrationKey k;
  k.kind = s.frontend.kind;
  k.n_rx = s.ue.size();
  k.n_dim = s.pss.n_dim;
  k.n_slot = s.pss.n_slot;
  k.n_sig = s.pss.n_sig;
  k.n_streams = s.frontend.rows(s.ue.size());
  if (k.kind == FrontendKind::digital_q) {
    k.bits = s.frontend.bits;
    k.quantizer = s.frontend.quantizer;
    k.agc_backoff_db = s.frontend.agc_backoff_db;
  }
  if (!is_digital(k.kind)) {
    k.ue = s.ue;
    k.sampling = s.sampling;
  } else {
    k.ue = ArrayGeometry{s.ue.rows, s.ue.cols, 0.5};  // spacing does not enter the digital null
  }
  k.p_fa = opt.p_fa;
  k.n_trials = opt.n_trials;
  k.seed = opt.seed;
  return k;
}

ThresholdModel calibrate(const TrialKernel& kernel, const CalibrationOptions& opt,
                         const ExecOptions& exec, const CalibrationCache* cache) {
  if (opt.n_trials < 1000) throw CalibrationError("calibration needs at least 1000 null trials");
  const CalibrationKey key = calibration_key(kernel.scenario(), opt);
  if (cache) {
    if (auto hit = cache->load(key)) return *hit;
  }
  TrialBatch batch;
  batch.seed = opt.seed;
  batch.stream = stable_hash("calibration/" + key.id());
  batch.point = 0;
  batch.amplitude = 0.0;
  batch.n_trials = opt.n_trials;
  std::vector<double> T = exec.parallel ? run_trials_parallel(kernel, batch, exec.threads)
                                        : run_trials_serial(kernel, batch);
  ThresholdModel m = threshold_from_samples(key, std::move(T));
  if (cache) cache->store(m);
  return m;
}

std::vector<std::string> monotonicity_diagnostics(const std::vector<CurvePoint>& points) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const CurvePoint& a = points[i - 1];
    const CurvePoint& b = points[i];
    if (b.snr_data_db > a.snr_data_db && b.p_md > a.p_md && b.ci_lo > a.ci_hi) {
      std::ostringstream os;
      os << "p_md rises from " << a.p_md << " at " << a.snr_data_db << " dB to " << b.p_md << " at "
         << b.snr_data_db << " dB beyond CI overlap";
      out.push_back(os.str());
    }
  }
  return out;
}

Curve run_curve(const TrialKernel& kernel, const std::vector<double>& snr_grid_db,
                const CurveOptions& opt, const CalibrationOptions& calib, const ExecOptions& exec,
                const CalibrationCache* cache) {
  Curve c;
  c.scenario_id = kernel.scenario().id;
  if (snr_grid_db.empty()) return c;
  c.threshold = calibrate(kernel, calib, exec, cache);
  int zeros = 0;
  for (std::size_t i = 0; i < snr_grid_db.size(); ++i) {
    const SnrPoint p = make_snr_point(snr_grid_db[i], kernel.scenario());
    c.points.push_back(run_point(kernel, p, i, opt.n_trials, c.threshold.t_star, exec));
    zeros = c.points.back().n_missed == 0 ? zeros + 1 : 0;
    if (opt.stop_after_zero > 0 && zeros >= opt.stop_after_zero) break;
  }
  c.diagnostics = monotonicity_diagnostics(c.points);
  return c;
}

std::optional<double> crossing_snr_db(const std::vector<CurvePoint>& points, double target) {
  for (std::size_t i = 1; i < points.size(); ++i) {
    const CurvePoint& a = points[i - 1];
    const CurvePoint& b = points[i];
    if (a.p_md >= target && b.p_md < target) {
      auto floor_log = [](const CurvePoint& p) {
        return std::log(std::max(p.p_md, 0.5 / std::max<long>(p.n_trials, 1)));
      };
      const double la = floor_log(a), lb = floor_log(b), lt = std::log(target);
      if (la == lb) return a.snr_data_db;
      return a.snr_data_db + (la - lt) / (la - lb) * (b.snr_data_db - a.snr_data_db);
    }
  }
  return std::nullopt;
}

void write_curves_csv(const std::filesystem::path& path, const std::vector<Curve>& curves) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "scenario_id,snr_data_db,snr_pss_db,n_trials,n_missed,p_md,ci_lo,ci_hi\n";
  out << std::setprecision(10);
  for (const Curve& c : curves) {
    for (const CurvePoint& p : c.points) {
      out << c.scenario_id << ',' << p.snr_data_db << ',' << p.snr_pss_db << ',' << p.n_trials << ','
          << p.n_missed << ',' << p.p_md << ',' << p.ci_lo << ',' << p.ci_hi << '\n';
    }
  }
}

}  // namespace cellsearch

#include "cellsearch/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "cellsearch/config_io.hpp"
#include "cellsearch/errors.hpp"
#include "cellsearch/figures.hpp"
#include "cellsearch/glrt_detector.hpp"
#include "cellsearch/harness.hpp"
#include "cellsearch/threshold_calibration.hpp"

#ifndef CELLSEARCH_VERSION
#define CELLSEARCH_VERSION "dev"
#endif

namespace cellsearch {

using nlohmann::json;

namespace {

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CalibrationError& e) {
    err << "calibration error: " << e.what() << "\n";
    return kExitCalibration;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

ExperimentConfig load_request_config(const RunRequest& req, const std::vector<std::string>& extra = {}) {
  std::vector<std::string> ov = extra;
  ov.insert(ov.end(), req.overrides.begin(), req.overrides.end());
  if (req.seed) ov.push_back("experiment.seed=" + std::to_string(*req.seed));
  if (req.trials) ov.push_back("experiment.trials=" + std::to_string(*req.trials));
  if (req.threads < 0) throw ConfigError("--threads must be non-negative");
  if (req.config_path) return load_config(*req.config_path, ov);
  return resolve_config(json::object(), ov);
}

std::filesystem::path calibration_dir(const RunRequest& req) {
  if (req.calib_dir) return *req.calib_dir;
  if (const char* env = std::getenv("SIM_CALIB_DIR"); env && *env) return env;
  return req.output_dir / "calibration";
}

CalibrationOptions calibration_options(const ExperimentConfig& cfg) {
  CalibrationOptions c;
  c.n_trials = cfg.calib_trials;
  c.p_fa = cfg.p_fa();
  c.seed = cfg.seed;
  return c;
}

json budget_json(const ExperimentConfig& cfg) {
  const FalseAlarmBudget b = fa_budget(cfg.r_fa, cfg.base.pss, cfg.freq);
  return json{{"r_fa", b.r_fa},      {"n_dly", b.n_dly}, {"n_fo", b.n_fo}, {"n_pss", b.n_pss},
              {"n_hyp", b.n_hyp},    {"p_fa_budget", b.p_fa}, {"p_fa_used", cfg.p_fa()}};
}

json curve_json(const Curve& c, const CalibrationCache& cache) {
  json diag = c.diagnostics;
  const auto cross = crossing_snr_db(c.points);
  return json{{"scenario_id", c.scenario_id},
              {"calibration", c.threshold.to_json()},
              {"calibration_file", cache.path_for(c.threshold.key).filename().string()},
              {"crossing_snr_db_at_pmd_0.01", cross ? json(*cross) : json(nullptr)},
              {"monotonicity_diagnostics", diag}};
}

json manifest_base(const std::string& command, const ExperimentConfig& cfg) {
  const double target = rate_target_snr(cfg.rate_target_bps, cfg.base.pss.w_tot_hz, cfg.rate_beta);
  return json{{"tool", "cellsearch"},
              {"version", CELLSEARCH_VERSION},
              {"command", command},
              {"seed", cfg.seed},
              {"trials_per_point", cfg.trials},
              {"calibration_trials", cfg.calib_trials},
              {"overrides", cfg.overrides},
              {"config", cfg.resolved},
              {"budget", budget_json(cfg)},
              {"snr_conversion_factor_db",
               linear_to_db(snr_conversion_factor(cfg.base.pss, cfg.base.bs, cfg.base.ue))},
              {"rate_target", {{"bps", cfg.rate_target_bps}, {"beta", cfg.rate_beta}, {"snr_data_db", linear_to_db(target)}}},
              {"slot_model", cfg.base.slot_model == SlotModel::reduced ? "reduced" : "explicit"}};
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

std::vector<Curve> run_scenarios(const std::vector<Scenario>& scenarios, const ExperimentConfig& cfg,
                                 const RunRequest& req, const CalibrationCache& cache, std::ostream& out) {
  ExecOptions exec;
  exec.seed = cfg.seed;
  exec.threads = req.threads;
  CurveOptions copt;
  copt.n_trials = cfg.trials;
  copt.stop_after_zero = cfg.stop_after_zero;
  std::vector<Curve> curves;
  for (const Scenario& s : scenarios) {
    const TrialKernel kernel(s);
    Curve c = run_curve(kernel, cfg.snr_grid_db, copt, calibration_options(cfg), exec, &cache);
    const auto cross = crossing_snr_db(c.points);
    out << std::left << std::setw(22) << s.id << " t*=" << std::setprecision(6) << c.threshold.t_star
        << "  P_MD=0.01 at " << (cross ? std::to_string(*cross) + " dB" : std::string("n/a")) << "\n";
    for (const auto& d : c.diagnostics) out << "  warning: " << d << "\n";
    curves.push_back(std::move(c));
  }
  return curves;
}

// Wide table: one row per SNR, one p_md column per series, plus the
// rate-target marker.
void write_plot_data(const std::filesystem::path& path, const std::vector<Curve>& curves, double marker_db) {
  std::map<double, std::map<std::string, double>> rows;
  for (const Curve& c : curves) {
    for (const CurvePoint& p : c.points) rows[p.snr_data_db][c.scenario_id] = p.p_md;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# snr_data_db";
  for (const Curve& c : curves) out << ' ' << c.scenario_id;
  out << " rate_target_db\n" << std::setprecision(10);
  for (const auto& [snr, vals] : rows) {
    out << snr;
    for (const Curve& c : curves) {
      const auto it = vals.find(c.scenario_id);
      out << ' ';
      if (it == vals.end()) out << "nan";
      else out << it->second;
    }
    out << ' ' << marker_db << "\n";
  }
}

struct Check {
  std::string name;
  bool pass;
  std::string detail;
};

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

std::vector<SlotObservation> random_dataset(FrontendKind kind, int rows, int n_slot, int n_dim, int n_sig,
                                            const PssWaveform& wf, double signal, Rng& rng) {
  std::vector<SlotObservation> obs;
  for (int k = 0; k < n_slot; ++k) {
    SlotObservation o;
    o.kind = kind;
    o.slot = k;
    o.data.resize(rows, n_dim);
    for (Eigen::Index j = 0; j < o.data.cols(); ++j) {
      for (Eigen::Index i = 0; i < o.data.rows(); ++i) o.data(i, j) = rng.complex_normal(1.0);
    }
    if (signal > 0.0) {
      CVector u(rows);
      for (int i = 0; i < rows; ++i) u(i) = rng.complex_normal(1.0);
      u.normalize();
      for (int j = 0; j < n_sig; ++j) o.data.noalias() += (signal * rng.complex_normal(1.0)) * u * wf.coeffs[j].adjoint();
    }
    obs.push_back(std::move(o));
  }
  return obs;
}

std::vector<Check> validation_checks(long trials, bool inject_fault) {
  std::vector<Check> checks;
  Rng rng({0x7A11DA7EULL, static_cast<std::uint64_t>(trials)});

  PssParams small;
  small.n_dim = 64;
  small.n_slot = 5;
  const PssConfig cfg = build_config(small);
  const auto waveforms = generate_waveforms(cfg);
  const PssWaveform& wf = waveforms.front();

  // Lambda from the explicit likelihood vs the monotone map of T.
  double worst = 0.0;
  for (int d = 0; d < 50; ++d) {
    const bool digital = d % 2 == 0;
    const int rows = digital ? 4 : (d % 4 == 1 ? 1 : 3);
    const auto obs = random_dataset(digital ? FrontendKind::digital : FrontendKind::analog, rows, cfg.n_slot,
                                    cfg.n_dim, cfg.n_sig, wf, d % 3 == 0 ? 0.0 : 3.0, rng);
    const double T = compute_statistic(obs, wf).T;
    double lam = glrt_lambda_oracle(obs, wf);
    if (inject_fault && d == 7) lam *= 1.0 + 1e-6;
    const double map = lambda_from_statistic(T, cfg.n_slot, rows, cfg.n_dim);
    worst = std::max(worst, std::abs(lam - map) / std::max(std::abs(lam), 1e-300));
  }
  checks.push_back({"lambda_equals_map_of_T", worst <= 1e-9, "max rel err " + fmt(worst)});

  // Scale invariance and bounds.
  {
    const auto obs = random_dataset(FrontendKind::digital, 4, cfg.n_slot, cfg.n_dim, cfg.n_sig, wf, 2.0, rng);
    auto scaled = obs;
    for (auto& o : scaled) o.data *= 37.5;
    const double a = compute_statistic(obs, wf).T, b = compute_statistic(scaled, wf).T;
    checks.push_back({"scale_invariance", std::abs(a - b) <= 1e-12, "|dT| " + fmt(std::abs(a - b))});
    checks.push_back({"statistic_in_unit_interval", a >= 0.0 && a <= 1.0, "T " + fmt(a)});
  }

  // Noiseless rank-one observations give T = 1.
  {
    std::vector<SlotObservation> obs;
    CVector u = CVector::Constant(4, cplx(0.5, 0.0));
    for (int k = 0; k < cfg.n_slot; ++k) {
      SlotObservation o;
      o.kind = FrontendKind::digital;
      o.slot = k;
      o.data = CMatrix::Zero(4, cfg.n_dim);
      for (int j = 0; j < cfg.n_sig; ++j) o.data.noalias() += rng.complex_normal(1.0) * u * wf.coeffs[j].adjoint();
      obs.push_back(std::move(o));
    }
    const double T = compute_statistic(obs, wf).T;
    checks.push_back({"noiseless_T_is_one", std::abs(T - 1.0) <= 1e-9, "T " + fmt(T)});
  }

  // Budget arithmetic with the default parameters.
  {
    const FalseAlarmBudget b = fa_budget(0.01, build_config({}));
    const bool ok = b.n_dly == 10000 && b.n_fo == 23 && b.n_pss == 3 && std::abs(b.p_fa / 1.4493e-8 - 1.0) < 5e-5;
    checks.push_back({"false_alarm_budget", ok, "P_FA " + fmt(b.p_fa) + ", N_FO " + std::to_string(b.n_fo)});
  }

  // Surrogate quantizer keeps (1 - alpha) of the input power.
  {
    FrontendSpec spec;
    spec.kind = FrontendKind::digital_q;
    spec.bits = 3;
    SlotObservation o;
    o.kind = FrontendKind::digital_q;
    const long n = std::max<long>(trials, 1000);
    o.data.resize(1, n);
    for (long j = 0; j < n; ++j) o.data(0, j) = rng.complex_normal(1.0);
    const double in = o.data.squaredNorm() / n;
    const SlotObservation q = quantize(o, spec, rng);
    const double ratio = q.data.squaredNorm() / n / in;
    const double expect = 1.0 - spec.alpha();
    const double tol = 4.0 * std::sqrt(2.0 * spec.alpha() / n) + 1e-3;
    checks.push_back({"quantizer_power_ratio", std::abs(ratio - expect) <= tol,
                      "ratio " + fmt(ratio) + " vs " + fmt(expect)});
  }
  return checks;
}

}  // namespace

int cmd_run(const RunRequest& req, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_request_config(req);
    const CalibrationCache cache(calibration_dir(req));
    const std::vector<Curve> curves = run_scenarios(cfg.scenarios, cfg, req, cache, out);
    std::filesystem::create_directories(req.output_dir);
    for (const Curve& c : curves) write_curves_csv(req.output_dir / (c.scenario_id + ".csv"), {c});
    json manifest = manifest_base("run", cfg);
    manifest["curves"] = json::array();
    for (const Curve& c : curves) manifest["curves"].push_back(curve_json(c, cache));
    write_json(req.output_dir / "manifest.json", manifest);
    out << "wrote " << curves.size() << " curve(s) to " << req.output_dir.string() << "\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_calibrate(const RunRequest& req, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_request_config(req);
    const CalibrationCache cache(calibration_dir(req));
    ExecOptions exec;
    exec.seed = cfg.seed;
    exec.threads = req.threads;
    json entries = json::array();
    for (const Scenario& s : cfg.scenarios) {
      const TrialKernel kernel(s);
      const ThresholdModel m = calibrate(kernel, calibration_options(cfg), exec, &cache);
      out << std::left << std::setw(22) << s.id << " t*=" << std::setprecision(8) << m.t_star << "  ("
          << cache.path_for(m.key).filename().string() << ")\n";
      json e = m.to_json();
      e["scenario_id"] = s.id;
      entries.push_back(e);
    }
    json manifest = manifest_base("calibrate", cfg);
    manifest["thresholds"] = entries;
    write_json(req.output_dir / "calibration_manifest.json", manifest);
    return static_cast<int>(kExitOk);
  });
}

int cmd_figures(const RunRequest& req, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const FigureBundle bundle = figure_bundle(req.which);
    const ExperimentConfig cfg = load_request_config(req);
    json base_tree = cfg.resolved;
    base_tree.erase("scenarios");
    std::vector<Scenario> scenarios;
    for (const FigureSeries& fs : bundle.series) {
      json t = base_tree;
      for (const auto& o : fs.set) apply_override(t, o);
      for (const auto& o : req.overrides) apply_override(t, o);  // user overrides win
      scenarios.push_back(scenario_from_json(t, fs.id));
    }
    const CalibrationCache cache(calibration_dir(req));
    out << "figure " << bundle.which << ": " << bundle.title << "\n";
    const std::vector<Curve> curves = run_scenarios(scenarios, cfg, req, cache, out);

    const std::string stem = "fig" + std::to_string(bundle.which);
    std::filesystem::create_directories(req.output_dir);
    write_curves_csv(req.output_dir / (stem + ".csv"), curves);
    const double marker = linear_to_db(rate_target_snr(cfg.rate_target_bps, cfg.base.pss.w_tot_hz, cfg.rate_beta));
    write_plot_data(req.output_dir / (stem + "_plot.dat"), curves, marker);

    json manifest = manifest_base("figures", cfg);
    manifest["figure"] = bundle.which;
    manifest["title"] = bundle.title;
    manifest["series"] = json::array();
    for (std::size_t i = 0; i < bundle.series.size(); ++i) {
      json s = curve_json(curves[i], cache);
      s["set"] = bundle.series[i].set;
      manifest["series"].push_back(s);
    }
    write_json(req.output_dir / (stem + "_manifest.json"), manifest);
    out << "wrote " << (req.output_dir / (stem + ".csv")).string() << "\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_validate(const RunRequest& req, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const long trials = req.trials.value_or(20000);
    if (trials < 1) throw ConfigError("--trials must be positive");
    const auto checks = validation_checks(trials, req.inject_fault);
    bool all = true;
    for (const Check& c : checks) {
      out << (c.pass ? "PASS  " : "FAIL  ") << std::left << std::setw(30) << c.name << c.detail << "\n";
      all = all && c.pass;
    }
    out << (all ? "all checks passed" : "some checks failed") << "\n";
    return static_cast<int>(all ? kExitOk : kExitCheckFailed);
  });
}

}  // namespace cellsearch

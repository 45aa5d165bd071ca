#include "cellsearch/threshold_calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cellsearch/errors.hpp"
#include "cellsearch/rng.hpp"

namespace cellsearch {

using nlohmann::json;

FalseAlarmBudget fa_budget(double r_fa, const PssConfig& cfg, const FrequencyUncertainty& fu) {
  if (!(r_fa > 0.0 && r_fa < 1.0)) throw ConfigError("budget.r_fa must be in (0, 1)");
  const HypothesisGrid g = make_grid(cfg, fu);
  FalseAlarmBudget b;
  b.r_fa = r_fa;
  b.n_dly = g.n_dly;
  b.n_fo = g.n_fo;
  b.n_pss = g.n_pss;
  b.n_hyp = g.size();
  b.p_fa = r_fa / static_cast<double>(b.n_hyp);
  return b;
}

TailFit fit_log_survival(const std::vector<double>& sorted, const TailFitOptions& opt) {
  const long n = static_cast<long>(sorted.size());
  const long m = std::min(n, std::max<long>(opt.min_points, std::lround(opt.fraction * n)));
  if (m < 3) throw CalibrationError("too few samples for a tail fit");

  std::vector<double> ts, ls;
  for (long i = n - m; i < n; ++i) {
    if (i > n - m && sorted[i] == sorted[i - 1]) continue;  // first index of a tie carries the count
    ts.push_back(sorted[i]);
    ls.push_back(std::log(static_cast<double>(n - i) / n));
  }
  if (ts.size() < 3) throw CalibrationError("tail has fewer than three distinct values");

  // Fit in a centred, scaled variable for conditioning.
  const double t0 = ts.front(), s = std::max(ts.back() - ts.front(), 1e-300);
  Eigen::MatrixXd A(ts.size(), 3);
  Eigen::VectorXd y(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double x = (ts[i] - t0) / s;
    A(i, 0) = 1.0;
    A(i, 1) = x;
    A(i, 2) = x * x;
    y(i) = ls[i];
  }
  const Eigen::Vector3d q = A.colPivHouseholderQr().solve(y);

  TailFit f;
  f.a = q(2) / (s * s);
  f.b = q(1) / s - 2.0 * q(2) * t0 / (s * s);
  f.c = q(0) - q(1) * t0 / s + q(2) * t0 * t0 / (s * s);
  f.t_lo = ts.front();
  f.t_hi = ts.back();
  f.n_points = static_cast<int>(ts.size());
  return f;
}

double solve_threshold(const TailFit& fit, double p_fa) {
  if (!(p_fa > 0.0 && p_fa < 1.0)) throw CalibrationError("p_fa must be in (0, 1)");
  if (!(fit.a < 0.0)) {
    throw CalibrationError("log-survival tail is not concave (a = " + std::to_string(fit.a) +
                           "); rerun with more calibration trials");
  }
  const double c = fit.c - std::log(p_fa);
  const double disc = fit.b * fit.b - 4.0 * fit.a * c;
  if (disc < 0.0) throw CalibrationError("tail fit never reaches the target false-alarm rate");
  // With a < 0 the fitted curve exceeds log(p_fa) between the roots; the
  // threshold is the upper one.
  const double sq = std::sqrt(disc);
  const double r1 = (-fit.b + sq) / (2.0 * fit.a);
  const double r2 = (-fit.b - sq) / (2.0 * fit.a);
  const double t = std::max(r1, r2);
  if (!(t > 0.0 && t < 1.0)) {
    throw CalibrationError("threshold " + std::to_string(t) + " outside (0, 1)");
  }
  return t;
}

std::string CalibrationKey::id() const {
  std::ostringstream os;
  os << to_string(kind) << "_rx" << n_rx << "_d" << n_dim << "_s" << n_slot << "_g" << n_sig;
  if (kind == FrontendKind::hybrid) os << "_st" << n_streams;
  if (kind == FrontendKind::digital_q) {
    os << "_b" << bits << (quantizer == QuantizerMode::physical ? "p" : "s");
    if (agc_backoff_db != 0.0) os << "_agc" << agc_backoff_db;
  }
  // Remaining fields only enter through the hash suffix.
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(stable_hash(to_json().dump())));
  os << "_" << hash;
  return os.str();
}

json CalibrationKey::to_json() const {
  return json{{"kind", to_string(kind)},
              {"n_rx", n_rx},
              {"n_dim", n_dim},
              {"n_slot", n_slot},
              {"n_sig", n_sig},
              {"n_streams", n_streams},
              {"bits", bits},
              {"quantizer", quantizer == QuantizerMode::physical ? "physical" : "surrogate"},
              {"agc_backoff_db", agc_backoff_db},
              {"ue", {{"rows", ue.rows}, {"cols", ue.cols}, {"spacing_wl", ue.spacing_wl}}},
              {"sampling", sampling == ElevationSampling::sphere ? "sphere" : "angle"},
              {"p_fa", p_fa},
              {"n_trials", n_trials},
              {"seed", seed}};
}

json ThresholdModel::to_json() const {
  return json{{"key", key.to_json()},
              {"fit",
               {{"a", fit.a},
                {"b", fit.b},
                {"c", fit.c},
                {"t_lo", fit.t_lo},
                {"t_hi", fit.t_hi},
                {"n_points", fit.n_points}}},
              {"t_star", t_star},
              {"empirical_max", empirical_max}};
}

ThresholdModel ThresholdModel::from_json(const json& j) {
  ThresholdModel m;
  const json& k = j.at("key");
  m.key.kind = parse_frontend_kind(k.at("kind").get<std::string>());
  m.key.n_rx = k.at("n_rx");
  m.key.n_dim = k.at("n_dim");
  m.key.n_slot = k.at("n_slot");
  m.key.n_sig = k.at("n_sig");
  m.key.n_streams = k.at("n_streams");
  m.key.bits = k.at("bits");
  m.key.quantizer = k.at("quantizer") == "physical" ? QuantizerMode::physical : QuantizerMode::surrogate;
  m.key.agc_backoff_db = k.at("agc_backoff_db");
  m.key.ue = {k.at("ue").at("rows"), k.at("ue").at("cols"), k.at("ue").at("spacing_wl")};
  m.key.sampling = k.at("sampling") == "angle" ? ElevationSampling::angle : ElevationSampling::sphere;
  m.key.p_fa = k.at("p_fa");
  m.key.n_trials = k.at("n_trials");
  m.key.seed = k.at("seed");
  const json& f = j.at("fit");
  m.fit = {f.at("a"), f.at("b"), f.at("c"), f.at("t_lo"), f.at("t_hi"), f.at("n_points")};
  m.t_star = j.at("t_star");
  m.empirical_max = j.at("empirical_max");
  return m;
}

ThresholdModel threshold_from_samples(CalibrationKey key, std::vector<double> samples,
                                      const TailFitOptions& opt) {
  std::sort(samples.begin(), samples.end());
  ThresholdModel m;
  m.key = std::move(key);
  m.fit = fit_log_survival(samples, opt);
  m.t_star = solve_threshold(m.fit, m.key.p_fa);
  m.empirical_max = samples.back();
  m.samples = std::move(samples);
  return m;
}

CalibrationCache::CalibrationCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path CalibrationCache::path_for(const CalibrationKey& key) const {
  return dir_ / ("calib_" + key.id() + ".json");
}

std::optional<ThresholdModel> CalibrationCache::load(const CalibrationKey& key) const {
  std::lock_guard lock(mu_);
  std::ifstream in(path_for(key));
  if (!in) return std::nullopt;
  try {
    ThresholdModel m = ThresholdModel::from_json(json::parse(in));
    if (!(m.key == key)) return std::nullopt;  // hash collision or stale file
    return m;
  } catch (const json::exception&) {
    return std::nullopt;  // unreadable entries are recomputed
  }
}

void CalibrationCache::store(const ThresholdModel& model) const {
  std::lock_guard lock(mu_);
  std::filesystem::create_directories(dir_);
  const auto path = path_for(model.key);
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw CalibrationError("cannot write calibration cache " + tmp.string());
    out << model.to_json().dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace cellsearch

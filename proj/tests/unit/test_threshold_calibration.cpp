#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <boost/math/special_functions/beta.hpp>

#include "cellsearch/errors.hpp"
#include "cellsearch/harness.hpp"
#include "cellsearch/threshold_calibration.hpp"
#include "test_support.hpp"

using namespace cellsearch;

namespace {

Scenario analog_scenario() {
  Scenario s;
  s.id = "analog";
  s.frontend.kind = FrontendKind::analog;
  return s;
}

std::vector<double> null_samples(const TrialKernel& k, long n, std::uint64_t stream) {
  TrialBatch b;
  b.seed = 99;
  b.stream = stream;
  b.n_trials = n;
  return run_trials_parallel(k, b);
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("cellsearch_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}

TEST_SUITE("threshold_calibration") {

TEST_CASE("false-alarm budget of the reference design") {
  const auto b = fa_budget(0.01, build_config({}));
  CHECK(b.n_dly == 10000);
  CHECK(b.n_fo == 23);
  CHECK(b.n_pss == 3);
  CHECK(b.n_hyp == 690000);
  CHECK(b.p_fa == doctest::Approx(1.4493e-8).epsilon(1e-4));
  CHECK_THROWS_AS(fa_budget(0.0, build_config({})), ConfigError);
}

TEST_CASE("tail fit at a relaxed rate matches the empirical quantile") {
  const TrialKernel k(analog_scenario());
  auto x = null_samples(k, 20000, 1);
  std::sort(x.begin(), x.end());
  const TailFit f = fit_log_survival(x);
  CHECK(f.n_points >= 1900);
  CHECK(f.a < 0.0);
  const double t = solve_threshold(f, 1e-2);
  CHECK(t == doctest::Approx(x[static_cast<std::size_t>(0.99 * x.size())]).epsilon(0.03));
}

TEST_CASE("threshold is monotone in the target rate") {
  const TrialKernel k(analog_scenario());
  auto x = null_samples(k, 20000, 2);
  std::sort(x.begin(), x.end());
  const TailFit f = fit_log_survival(x);
  double prev = 0.0;
  for (double p : {1e-3, 1e-5, 1e-8, 1e-10}) {
    const double t = solve_threshold(f, p);
    CHECK(t > prev);
    prev = t;
  }
}

TEST_CASE("analog threshold agrees with the exact beta quantile") {
  // Under noise ||v||^2 and the rest of the energy are independent Gamma(L)
  // and Gamma(n_slot (n_dim - n_sig)), so T is beta distributed.
  const Scenario s = analog_scenario();
  const TrialKernel k(s);
  CalibrationOptions opt;
  opt.n_trials = 50000;
  const auto m = calibrate(k, opt, {});
  const double exact = boost::math::ibetac_inv(200.0, 50.0 * 1020.0, opt.p_fa);
  CHECK(exact == doctest::Approx(0.0056323).epsilon(1e-4));
  CHECK(m.t_star == doctest::Approx(exact).epsilon(0.03));
  CHECK(m.t_star > m.empirical_max);
}

TEST_CASE("calibration is deterministic and shrinks with the signal dimension") {
  Scenario s = analog_scenario();
  CalibrationOptions opt;
  opt.n_trials = 20000;
  const double a = calibrate(TrialKernel(s), opt, {}).t_star;
  const double b = calibrate(TrialKernel(s), opt, {7, 3, true}).t_star;
  CHECK(a == b);
  PssParams p;
  p.n_dim = 2048;
  s.pss = build_config(p);
  CHECK(calibrate(TrialKernel(s), opt, {}).t_star < a);
  opt.n_trials = 999;
  CHECK_THROWS_AS(calibrate(TrialKernel(s), opt, {}), CalibrationError);
}

TEST_CASE("heavy tails and bad roots are rejected") {
  // Pareto: log-survival is convex in t.
  Rng rng(5);
  std::vector<double> x(20000);
  for (double& v : x) v = 0.01 * std::pow(1.0 - rng.uniform(), -1.0 / 1.5);
  std::sort(x.begin(), x.end());
  const TailFit f = fit_log_survival(x);
  CHECK(f.a > 0.0);
  CHECK_THROWS_AS(solve_threshold(f, 1e-8), CalibrationError);
  CHECK_THROWS_AS(solve_threshold({-1.0, 0.0, 0.0}, 1e-8), CalibrationError);   // root near 4.3
  CHECK_THROWS_AS(solve_threshold({-1.0, 0.0, -30.0}, 1e-8), CalibrationError); // no real root
  CHECK_THROWS_AS(solve_threshold({-1.0, 0.0, 0.0}, 0.0), CalibrationError);
  CHECK_THROWS_AS(fit_log_survival({0.5, 0.5, 0.5, 0.5}), CalibrationError);
}

TEST_CASE("calibrated threshold delivers its false-alarm rate") {
  const TrialKernel k(analog_scenario());
  CalibrationKey key;
  key.p_fa = 1e-3;
  const auto m = threshold_from_samples(key, null_samples(k, 100000, 10));
  const auto fresh = null_samples(k, 100000, 11);
  long n = 0;
  for (double t : fresh) n += t >= m.t_star ? 1 : 0;
  CHECK(n >= 70);
  CHECK(n <= 130);
}

TEST_CASE("cache round trip and invalidation") {
  const auto dir = temp_dir("cache");
  const CalibrationCache cache(dir);
  const Scenario s = analog_scenario();
  const TrialKernel k(s);
  CalibrationOptions opt;
  opt.n_trials = 5000;
  opt.p_fa = 1e-4;
  CHECK_FALSE(cache.load(calibration_key(s, opt)));
  const auto m = calibrate(k, opt, {}, &cache);
  REQUIRE(std::filesystem::exists(cache.path_for(m.key)));
  CHECK(cache.path_for(m.key).filename().string().rfind("calib_analog_rx16_d1024_s50_g4_", 0) == 0);
  const auto hit = cache.load(m.key);
  REQUIRE(hit);
  CHECK(hit->t_star == m.t_star);
  CHECK(hit->fit.a == m.fit.a);
  CHECK(hit->key == m.key);
  // Any key change misses.
  auto other = opt;
  other.seed = 2;
  CHECK_FALSE(cache.load(calibration_key(s, other)));
  other = opt;
  other.p_fa = 1e-5;
  CHECK_FALSE(cache.load(calibration_key(s, other)));
  // A corrupt file is ignored.
  { std::ofstream(cache.path_for(m.key)) << "{not json"; }
  CHECK_FALSE(cache.load(m.key));
  std::filesystem::remove_all(dir);
}

TEST_CASE("key ids separate every null-relevant field") {
  CalibrationKey a;
  auto b = a;
  b.bits = 3;
  CHECK(a.id() != b.id());
  b = a;
  b.ue.spacing_wl = 0.25;
  CHECK(a.id() != b.id());
  CHECK(a.id() == CalibrationKey{}.id());
  const auto j = ThresholdModel{a, {-1, 2, 3, 0.1, 0.2, 10}, 0.5, 0.3, {}}.to_json();
  const auto back = ThresholdModel::from_json(j);
  CHECK(back.key == a);
  CHECK(back.fit.n_points == 10);
  CHECK(back.t_star == 0.5);
}

}

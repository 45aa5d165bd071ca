#include <doctest.h>

#include "cellsearch/errors.hpp"
#include "cellsearch/rx_frontend.hpp"
#include "test_support.hpp"

using namespace cellsearch;

namespace {

PssConfig small_config(int n_dim) {
  PssParams p;
  p.n_dim = n_dim;
  p.n_slot = 2;
  return build_config(p);
}

}

TEST_SUITE("rx_frontend") {

TEST_CASE("kind parsing") {
  CHECK(parse_frontend_kind("hybrid") == FrontendKind::hybrid);
  CHECK(to_string(FrontendKind::digital_q) == "digital_q");
  CHECK_THROWS_AS(parse_frontend_kind("optical"), ConfigError);
  FrontendSpec s;
  s.kind = FrontendKind::hybrid;
  s.n_streams = 17;
  CHECK_THROWS_AS(s.validate(16), ConfigError);
  CHECK(s.rows(16) == 17);
  s.kind = FrontendKind::analog;
  CHECK(s.rows(16) == 1);
}

TEST_CASE("noiseless digital slot correlates to the channel response") {
  const PssConfig cfg = small_config(64);
  const auto wfs = generate_waveforms(cfg);
  Rng rng(1);
  const auto ch = draw_single_path({8, 8, 0.5}, {4, 4, 0.5}, {cfg.num_subsignals(), 4}, rng);
  SlotDrive d;
  d.waveform = &wfs[0];
  d.slot = 1;
  d.w_tx = TxBeamPolicy(TxMode::random, {8, 8, 0.5}).weights(rng);
  d.amplitude = 3.0;
  d.noise_psd = 1e-30;
  const auto obs = observe_slot({}, d, ch, rng);
  CHECK(obs.data.rows() == 16);
  CHECK(obs.data.cols() == 64);
  for (int pos = 0; pos < 4; ++pos) {
    const int l = 4 + pos;
    const auto dg = effective_gain_digital(ch, d.w_tx, l);
    CHECK((obs.data * wfs[0].coeffs[pos] - 3.0 * dg.alpha * ch.u()).norm() < 1e-12);
  }
}

TEST_CASE("analog and hybrid slots are the combined antenna block") {
  const PssConfig cfg = small_config(64);
  const auto wfs = generate_waveforms(cfg);
  Rng rng(2);
  const auto ch = draw_single_path({8, 8, 0.5}, {4, 4, 0.5}, {cfg.num_subsignals(), 4}, rng);
  FrontendSpec hyb;
  hyb.kind = FrontendKind::hybrid;
  SlotDrive d;
  d.waveform = &wfs[1];
  d.w_tx = CVector::Unit(64, 0);
  d.rx_weights = random_rx_weights({4, 4, 0.5}, 4, rng);
  d.amplitude = 2.0;
  Rng a(5), b(5);
  const auto obs_d = observe_slot({}, d, ch, a);
  const auto obs_h = observe_slot(hyb, d, ch, b);
  CHECK((obs_h.data - d.rx_weights.adjoint() * obs_d.data).norm() < 1e-10);
  FrontendSpec ana;
  ana.kind = FrontendKind::analog;
  CHECK_THROWS_AS(observe_slot(ana, d, ch, a), DimensionError);
}

TEST_CASE("receive weights are phase-only and streams differ") {
  Rng rng(3);
  const CMatrix w = random_rx_weights({4, 4, 0.5}, 4, rng);
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) CHECK(std::abs(w(i, j)) == doctest::Approx(0.25));
  CHECK((w.col(0) - w.col(1)).norm() > 1e-3);
  CHECK((w.col(2) - w.col(3)).norm() > 1e-3);
}

TEST_CASE("noise-only energy has the expected mean") {
  const PssConfig cfg = small_config(32);
  const auto wfs = generate_waveforms(cfg);
  Rng rng(4);
  const auto ch = draw_single_path({8, 8, 0.5}, {4, 4, 0.5}, {cfg.num_subsignals(), 4}, rng);
  SlotDrive d;
  d.waveform = &wfs[0];
  d.w_tx = CVector::Unit(64, 0);
  d.amplitude = 0.0;
  d.noise_psd = 2.5;
  double sum = 0.0;
  const int n = 4000;
  for (int t = 0; t < n; ++t) sum += observe_slot({}, d, ch, rng).data.squaredNorm();
  CHECK(sum / n == doctest::Approx(16 * 32 * 2.5).epsilon(0.005));
}

TEST_CASE("coding-gain table") {
  CHECK(coding_gain_alpha(1) == doctest::Approx(0.363078).epsilon(1e-5));
  CHECK(coding_gain_alpha(2) == doctest::Approx(0.117490).epsilon(1e-5));
  CHECK(coding_gain_alpha(3) == doctest::Approx(0.035481).epsilon(1e-5));
  CHECK(coding_gain_alpha(6) < coding_gain_alpha(5));
  CHECK_THROWS_AS(coding_gain_alpha(0), ConfigError);
}

TEST_CASE("optimized uniform quantizer") {
  CHECK(optimal_uniform_quantizer(1).mse == doctest::Approx(1.0 - 2.0 / kPi).epsilon(1e-9));
  CHECK(optimal_uniform_quantizer(1).step == doctest::Approx(std::sqrt(8.0 / kPi)).epsilon(1e-6));
  for (int b = 1; b <= 3; ++b) {
    CHECK(optimal_uniform_quantizer(b).mse == doctest::Approx(coding_gain_alpha(b)).epsilon(0.10));
  }
  // Monte Carlo check of the closed-form error.
  Rng rng(5);
  for (int b : {2, 3, 5}) {
    const auto q = optimal_uniform_quantizer(b);
    double e = 0.0;
    const int n = 400000;
    for (int i = 0; i < n; ++i) {
      const double x = rng.normal();
      e += std::pow(x - uniform_quantize(x, b, q.step), 2);
    }
    CHECK(e / n == doctest::Approx(q.mse).epsilon(0.02));
  }
  CHECK(uniform_quantize(100.0, 3, 0.5) == doctest::Approx(1.75));
  CHECK(uniform_quantize(-100.0, 3, 0.5) == doctest::Approx(-1.75));
  CHECK(uniform_quantize(0.1, 3, 0.5) == doctest::Approx(0.25));
}

TEST_CASE("surrogate quantizer keeps a (1 - alpha) power fraction") {
  FrontendSpec s;
  s.kind = FrontendKind::digital_q;
  Rng rng(6);
  SlotObservation obs;
  obs.kind = FrontendKind::digital_q;
  double in = 0.0, out = 0.0, cross = 0.0;
  for (int t = 0; t < 40; ++t) {
    obs.data = test::gaussian_matrix(16, 1024, rng);
    const auto q = quantize(obs, s, rng);
    in += obs.data.squaredNorm();
    out += q.data.squaredNorm();
    cross += (obs.data.conjugate().cwiseProduct(q.data)).sum().real();
  }
  const double a = coding_gain_alpha(3);
  CHECK(out / in == doctest::Approx(1.0 - a).epsilon(0.01));
  CHECK(cross / in == doctest::Approx(1.0 - a).epsilon(0.01));
}

TEST_CASE("physical quantizer error is close to the tabulated value") {
  FrontendSpec s;
  s.kind = FrontendKind::digital_q;
  s.quantizer = QuantizerMode::physical;
  for (int b : {1, 2, 3}) {
    s.bits = b;
    Rng rng(7);
    SlotObservation obs;
    obs.kind = FrontendKind::digital_q;
    obs.data = test::gaussian_matrix(16, 4096, rng);
    const auto q = quantize(obs, s, rng);
    const double rel = (q.data - obs.data).squaredNorm() / obs.data.squaredNorm();
    CHECK(rel == doctest::Approx(optimal_uniform_quantizer(b).mse).epsilon(0.03));
    CHECK(rel == doctest::Approx(coding_gain_alpha(b)).epsilon(0.10));
  }
  SlotObservation analog;
  analog.kind = FrontendKind::analog;
  Rng rng(8);
  CHECK_THROWS(quantize(analog, s, rng));
}

TEST_CASE("quantization SNR loss at low SNR") {
  const double a = coding_gain_alpha(3);
  const double g0 = std::pow(10.0, -1.5);
  const double loss_db = 10.0 * std::log10(g0 / effective_snr_after_quantization(g0, a));
  CHECK(loss_db == doctest::Approx(0.16).epsilon(0.125));
  CHECK(loss_db < 0.2);
  CHECK(effective_snr_after_quantization(g0, 0.0) == doctest::Approx(g0));
}

TEST_CASE("A/D power") {
  const double pfm = 59.4e-15;
  CHECK(adc_power(16, pfm, 1e9, 3) * 1e3 == doctest::Approx(15.2064).epsilon(1e-6));
  CHECK(adc_power(2, pfm, 1e9, 3) * 1e3 == doctest::Approx(1.9008).epsilon(1e-6));
  CHECK(adc_power(16, pfm, 1e9, 6) * 1e3 == doctest::Approx(121.6512).epsilon(1e-6));
}

}

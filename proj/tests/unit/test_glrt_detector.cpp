#include <doctest.h>

#include "cellsearch/errors.hpp"
#include "cellsearch/glrt_detector.hpp"
#include "test_support.hpp"

using namespace cellsearch;

namespace {

struct Setup {
  PssConfig cfg;
  std::vector<PssWaveform> wfs;
  ArrayGeometry bs{8, 8, 0.5};
  ArrayGeometry ue{4, 4, 0.5};
};

Setup make_setup(int n_dim, int n_slot, ArrayGeometry ue = {4, 4, 0.5}) {
  PssParams p;
  p.n_dim = n_dim;
  p.n_slot = n_slot;
  Setup s{build_config(p), {}, {8, 8, 0.5}, ue};
  s.wfs = generate_waveforms(s.cfg);
  return s;
}

std::vector<SlotObservation> observe(const Setup& s, const FrontendSpec& fe, int wf, double amplitude,
                                     double nu, Rng& rng) {
  const auto ch = draw_single_path(s.bs, s.ue, {s.cfg.num_subsignals(), s.cfg.n_sig}, rng);
  const TxBeamPolicy tx(TxMode::omni, s.bs);
  std::vector<SlotObservation> out;
  for (int k = 0; k < s.cfg.n_slot; ++k) {
    SlotDrive d;
    d.waveform = &s.wfs[wf];
    d.slot = k;
    d.n_sig = s.cfg.n_sig;
    d.w_tx = tx.weights(rng);
    if (!is_digital(fe.kind)) d.rx_weights = random_rx_weights(s.ue, fe.rows(s.ue.size()), rng);
    d.amplitude = amplitude;
    d.noise_psd = nu;
    out.push_back(observe_slot(fe, d, ch, rng));
  }
  return out;
}

FrontendSpec kind(FrontendKind k, int streams = 4) {
  FrontendSpec f;
  f.kind = k;
  f.n_streams = streams;
  return f;
}

}

TEST_SUITE("glrt_detector") {

TEST_CASE("hypothesis grid of the reference design") {
  const HypothesisGrid g = make_grid(build_config({}), {});
  CHECK(g.n_dly == 10000);
  CHECK(g.n_fo == 23);
  CHECK(g.n_pss == 3);
  CHECK(g.size() == 690000);
  CHECK(g.freq_step_hz == doctest::Approx(2500.0));
  CHECK(doppler_hz(30.0 / 3.6, 28e9) == doctest::Approx(778.316).epsilon(1e-5));
  CHECK(g.max_offset_hz == doctest::Approx(28778.316).epsilon(1e-7));
  CHECK(g.freq_hz(11) == doctest::Approx(0.0));
  CHECK(g.freq_hz(0) == doctest::Approx(-27500.0));
}

TEST_CASE("noiseless digital observation: rank-one V and T = 1") {
  const Setup s = make_setup(64, 3);
  Rng rng(1);
  const auto obs = observe(s, {}, 0, 5.0, 1e-30, rng);
  const auto st = compute_statistic(obs, s.wfs[0]);
  CHECK(st.T == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(st.V.cols() == 12);
  const Eigen::JacobiSVD<CMatrix> svd(st.V);
  CHECK(svd.singularValues()(1) < 1e-9 * svd.singularValues()(0));
  const auto an = compute_statistic(observe(s, kind(FrontendKind::analog), 0, 5.0, 1e-30, rng), s.wfs[0]);
  CHECK(an.T == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(st.T <= 1.0);
  CHECK(an.T <= 1.0);
}

TEST_CASE("matched-filter outputs under noise have the right moments") {
  const Setup s = make_setup(64, 2);
  Rng rng(2);
  double sum = 0.0, cross = 0.0;
  const int n = 2000;
  for (int t = 0; t < n; ++t) {
    const auto V = correlate_digital(observe(s, {}, 0, 0.0, 3.0, rng), s.wfs[0]);
    sum += V.squaredNorm() / V.size();
    cross += (V.col(0).conjugate().cwiseProduct(V.col(1))).sum().real() / V.rows();
  }
  CHECK(sum / n == doctest::Approx(3.0).epsilon(0.01));
  CHECK(std::abs(cross / n) < 0.05);
}

TEST_CASE("correlation is linear in the observation") {
  const Setup s = make_setup(32, 2);
  Rng rng(3);
  auto a = observe(s, {}, 1, 1.0, 1.0, rng);
  auto b = observe(s, {}, 1, 1.0, 1.0, rng);
  auto c = a;
  const cplx x(0.3, -1.2), y(2.0, 0.5);
  for (std::size_t k = 0; k < c.size(); ++k) c[k].data = x * a[k].data + y * b[k].data;
  const CMatrix lhs = correlate_digital(c, s.wfs[1]);
  const CMatrix rhs = x * correlate_digital(a, s.wfs[1]) + y * correlate_digital(b, s.wfs[1]);
  CHECK((lhs - rhs).norm() < 1e-12 * lhs.norm());
}

TEST_CASE("statistic is scale invariant and lies in [0, 1]") {
  const Setup s = make_setup(32, 2);
  Rng rng(4);
  for (auto k : {FrontendKind::digital, FrontendKind::analog, FrontendKind::hybrid}) {
    for (double amp : {0.0, 0.5, 4.0}) {
      auto obs = observe(s, kind(k), 0, amp, 1.0, rng);
      const double T = compute_statistic(obs, s.wfs[0]).T;
      CHECK(T >= 0.0);
      CHECK(T <= 1.0);
      for (auto& o : obs) o.data *= cplx(0.0, 7.5);
      CHECK(compute_statistic(obs, s.wfs[0]).T == doctest::Approx(T).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero observation is degenerate") {
  const Setup s = make_setup(32, 2);
  Rng rng(5);
  auto obs = observe(s, {}, 0, 1.0, 1.0, rng);
  for (auto& o : obs) o.data.setZero();
  CHECK_THROWS_AS(compute_statistic(obs, s.wfs[0]), DegenerateObservation);
  for (auto& o : obs) o.kind = FrontendKind::analog;
  CHECK_THROWS_AS(compute_statistic(obs, s.wfs[0]), DegenerateObservation);
}

TEST_CASE("analog null mean is n_sig / n_dim") {
  // The null law does not depend on the element count; a 2x2 array keeps
  // this cheap.
  const Setup s = make_setup(1024, 50, {2, 2, 0.5});
  Rng rng(6);
  double sum = 0.0;
  const int n = 200;
  for (int t = 0; t < n; ++t) sum += compute_statistic(observe(s, kind(FrontendKind::analog), 0, 0.0, 1.0, rng), s.wfs[0]).T;
  CHECK(sum / n == doctest::Approx(0.00390625).epsilon(0.05));
}

TEST_CASE("digital null mean against a direct eigen-solver computation") {
  // Reference: V is 16 x L white Gaussian; the energy adds the remaining
  // 16 (n_dim - n_sig) per slot.
  const Setup s = make_setup(32, 2);
  Rng ra(7), rb(8);
  const int n = 3000;
  double det = 0.0, ref = 0.0;
  for (int t = 0; t < n; ++t) {
    det += compute_statistic(observe(s, {}, 0, 0.0, 1.0, ra), s.wfs[0]).T;
    const CMatrix V = test::gaussian_matrix(16, 8, rb);
    const CMatrix rest = test::gaussian_matrix(16, 2 * 28, rb);
    const Eigen::SelfAdjointEigenSolver<CMatrix> es(V * V.adjoint());
    ref += es.eigenvalues().maxCoeff() / (V.squaredNorm() + rest.squaredNorm());
  }
  CHECK(det / n == doctest::Approx(ref / n).epsilon(0.02));
}

TEST_CASE("closed-form Lambda equals the explicit likelihood ratio") {
  const Setup s = make_setup(16, 2, {2, 2, 0.5});
  Rng rng(9);
  double worst = 0.0;
  int count = 0;
  for (auto k : {FrontendKind::digital, FrontendKind::analog, FrontendKind::hybrid}) {
    const FrontendSpec fe = kind(k, 2);
    for (int t = 0; t < 334; ++t) {
      const double amp = t % 3 == 0 ? 0.0 : 0.5 * (t % 7);
      const auto obs = observe(s, fe, t % 3, amp, 1.0, rng);
      const auto st = compute_statistic(obs, s.wfs[t % 3]);
      const double closed = lambda_from_statistic(st.T, 2, fe.rows(4), 16);
      const double oracle = glrt_lambda_oracle(obs, s.wfs[t % 3]);
      CHECK(closed >= 0.0);
      worst = std::max(worst, std::abs(closed - oracle) / std::max(1.0, std::abs(oracle)));
      ++count;
    }
  }
  CHECK(count >= 1000);
  CHECK(worst < 1e-9);
  CHECK(lambda_from_statistic(0.0, 50, 16, 1024) == 0.0);
}

TEST_CASE("dominant direction beats any other unit vector") {
  Rng rng(10);
  const CMatrix V = test::gaussian_matrix(16, 40, rng);
  const auto st = statistic_digital(V, V.squaredNorm() * 3);
  for (int i = 0; i < 200; ++i) {
    const CVector w = test::gaussian_matrix(16, 1, rng).col(0).normalized();
    CHECK((w.adjoint() * V).squaredNorm() <= st.numerator * (1 + 1e-12));
  }
  CHECK((st.u_hat.adjoint() * V).squaredNorm() == doctest::Approx(st.numerator).epsilon(1e-10));
}

TEST_CASE("power iteration agrees with a dense eigensolver") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int rows = 2 + trial % 15;
    const CMatrix A = test::gaussian_matrix(rows, 3 + trial % 20, rng);
    const CMatrix G = A * A.adjoint();
    const Eigen::SelfAdjointEigenSolver<CMatrix> es(G);
    const auto ep = dominant_eigenpair(G);
    CHECK(ep.value == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-9));
    CHECK((G * ep.vector - ep.value * ep.vector).norm() < 1e-6 * ep.value);
    CHECK(dominant_left_singular(A).value == doctest::Approx(ep.value).epsilon(1e-9));
  }
  // Nearly tied top eigenvalues: the value is still right.
  CMatrix D = CMatrix::Zero(3, 3);
  D(0, 0) = 1.0;
  D(1, 1) = 1.0 - 1e-9;
  D(2, 2) = 0.2;
  CHECK(dominant_eigenpair(D).value == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(dominant_eigenpair(CMatrix::Zero(2, 2)).value == 0.0);
  CHECK_THROWS_AS(dominant_eigenpair(CMatrix::Zero(2, 3)), DimensionError);
}

TEST_CASE("waveform search") {
  const Setup s = make_setup(64, 4);
  Rng rng(12);
  const auto obs = observe(s, {}, 2, 150.0, 1.0, rng);
  CHECK_THROWS_AS(search_fast(obs, s.wfs[2], std::nullopt), CalibrationError);
  CHECK_THROWS_AS(search_waveforms(obs, s.wfs, std::nullopt), CalibrationError);
  const auto r = search_waveforms(obs, s.wfs, 0.3);
  CHECK(r.detected);
  CHECK(r.best.waveform == 2);
  CHECK(r.evaluated == 3);
  CHECK(r.exceedances >= 1);
  const auto f = search_fast(obs, s.wfs[2], 0.3);
  CHECK(f.T == doctest::Approx(r.T));
  CHECK_FALSE(search_fast(obs, s.wfs[2], 1.01).detected);
  auto mixed = obs;
  mixed[1].kind = FrontendKind::analog;
  CHECK_THROWS(compute_statistic(mixed, s.wfs[0]));
}

}

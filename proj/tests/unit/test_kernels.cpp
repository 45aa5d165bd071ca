#include <doctest.h>

#include "cellsearch/errors.hpp"
#include "cellsearch/kernels.hpp"
#include "test_support.hpp"

using namespace cellsearch;

namespace {

Scenario tiny(FrontendKind kind, SlotModel model) {
  Scenario s;
  s.id = "tiny_" + to_string(kind);
  PssParams p;
  p.n_dim = 16;
  p.n_slot = 3;
  s.pss = build_config(p);
  s.bs = {4, 4, 0.5};
  s.ue = {2, 2, 0.5};
  s.frontend.kind = kind;
  s.frontend.n_streams = 2;
  s.slot_model = model;
  return s;
}

std::vector<double> draws(const Scenario& s, double amp, std::uint64_t stream, long n) {
  TrialBatch b;
  b.stream = stream;
  b.amplitude = amp;
  b.n_trials = n;
  return run_trials_parallel(TrialKernel(s), b);
}

}

TEST_SUITE("kernels") {

TEST_CASE("parallel trials reproduce the serial reference bit for bit") {
  for (auto k : {FrontendKind::digital, FrontendKind::digital_q, FrontendKind::analog, FrontendKind::hybrid}) {
    Scenario s;
    s.frontend.kind = k;
    s.tx_mode = TxMode::random;
    s.channel_mode = ChannelMode::multipath;
    const TrialKernel kernel(s);
    TrialBatch b;
    b.seed = 5;
    b.stream = 17;
    b.point = 3;
    b.amplitude = 20.0;
    b.n_trials = 64;
    const auto ref = run_trials_serial(kernel, b);
    for (int threads : {1, 2, 4}) CHECK(run_trials_parallel(kernel, b, threads) == ref);
  }
}

TEST_CASE("trial streams depend on every key component") {
  const TrialKernel kernel(tiny(FrontendKind::digital, SlotModel::reduced));
  TrialBatch b;
  b.n_trials = 4;
  const auto base = run_trials_serial(kernel, b);
  auto c = b;
  c.seed = 2;
  CHECK(run_trials_serial(kernel, c) != base);
  c = b;
  c.stream = 1;
  CHECK(run_trials_serial(kernel, c) != base);
  c = b;
  c.point = 1;
  CHECK(run_trials_serial(kernel, c) != base);
  CHECK(run_trials_serial(kernel, b) == base);
}

TEST_CASE("reduced statistics follow the explicit slot model") {
  const long n = 3000;
  for (auto k : {FrontendKind::digital, FrontendKind::digital_q, FrontendKind::analog, FrontendKind::hybrid}) {
    for (double amp : {0.0, 8.0}) {
      CAPTURE(to_string(k));
      CAPTURE(amp);
      const auto a = draws(tiny(k, SlotModel::reduced), amp, 1, n);
      const auto b = draws(tiny(k, SlotModel::explicit_slots), amp, 2, n);
      CHECK(test::ks_distance(a, b) < test::ks_critical_1pct(n, n));
    }
  }
}

TEST_CASE("residual frequency offset lowers the statistic") {
  Scenario s = tiny(FrontendKind::analog, SlotModel::reduced);
  const double aligned = test::mean(draws(s, 8.0, 3, 2000));
  s.residual_offset_hz = 5000.0;  // sinc(0.5) amplitude loss
  const double offset = test::mean(draws(s, 8.0, 3, 2000));
  CHECK(offset < aligned);
  s.slot_model = SlotModel::explicit_slots;
  CHECK(test::ks_distance(draws(s, 8.0, 4, 3000), [&] {
          Scenario r = s;
          r.slot_model = SlotModel::reduced;
          return draws(r, 8.0, 5, 3000);
        }()) < test::ks_critical_1pct(3000, 3000));
}

TEST_CASE("physical quantizer needs explicit slots") {
  Scenario s = tiny(FrontendKind::digital_q, SlotModel::reduced);
  s.frontend.quantizer = QuantizerMode::physical;
  CHECK_THROWS_AS(TrialKernel{s}, ConfigError);
  s.slot_model = SlotModel::explicit_slots;
  const TrialKernel k(s);
  Rng rng(1);
  const double T = k.run(8.0, rng);
  CHECK(T > 0.0);
  CHECK(T < 1.0);
}

}

// Serial reference vs OpenMP kernels: Monte Carlo trial batches and the
// full-grid waveform scan.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "cellsearch/kernels.hpp"
#include "cellsearch/waveform_mode.hpp"

using namespace cellsearch;

namespace {

Scenario scenario_for(int kind) {
  Scenario s;
  s.frontend.kind = static_cast<FrontendKind>(kind);
  return s;
}

TrialBatch batch(long n) {
  TrialBatch b;
  b.stream = 1;
  b.amplitude = 10.0;
  b.n_trials = n;
  return b;
}

void BM_trials_serial(benchmark::State& st) {
  const TrialKernel k(scenario_for(static_cast<int>(st.range(0))));
  for (auto _ : st) benchmark::DoNotOptimize(run_trials_serial(k, batch(256)));
  st.SetItemsProcessed(st.iterations() * 256);
  st.SetLabel(to_string(k.scenario().frontend.kind));
}

void BM_trials_parallel(benchmark::State& st) {
  const TrialKernel k(scenario_for(static_cast<int>(st.range(0))));
  const int threads = static_cast<int>(st.range(1));
  for (auto _ : st) benchmark::DoNotOptimize(run_trials_parallel(k, batch(256), threads));
  st.SetItemsProcessed(st.iterations() * 256);
  st.SetLabel(to_string(k.scenario().frontend.kind) + " threads=" + std::to_string(threads));
}

struct ScanSetup {
  WaveformCapture cap;
  ScanTemplates tpl;
};

// Short-period configuration: 800 delays x 2 frequencies x 3 waveforms.
const ScanSetup& scan_setup() {
  static const ScanSetup s = [] {
    PssParams p;
    p.t_per_s = 4e-4;
    p.n_slot = 4;
    p.n_dim = 800;
    const PssConfig cfg = build_config(p);
    FrequencyUncertainty fu;
    fu.lo_ppm = 0.05;
    const HypothesisGrid grid = make_grid(cfg, fu);
    const auto wfs = generate_waveforms(cfg);
    const WaveformLayout lay = make_layout(cfg);
    Rng rng(3);
    const ArrayGeometry bs{8, 8, 0.5}, ue{4, 4, 0.5};
    const auto ch = draw_single_path(bs, ue, {cfg.num_subsignals(), cfg.n_sig}, rng);
    CaptureDrive d;
    d.waveform = &wfs[0];
    d.delay_samples = 100.5;
    d.amplitude = 50.0;
    for (int k = 0; k < cfg.n_slot; ++k) d.tx_weights.push_back(CVector::Unit(64, 0));
    return ScanSetup{synthesize_capture({}, lay, ch, d, rng), make_templates(wfs, grid, lay.fs)};
  }();
  return s;
}

void BM_scan_serial(benchmark::State& st) {
  const auto& s = scan_setup();
  for (auto _ : st) benchmark::DoNotOptimize(scan_serial(s.cap, s.tpl, 0.5));
}

void BM_scan_parallel(benchmark::State& st) {
  const auto& s = scan_setup();
  const int threads = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(scan_parallel(s.cap, s.tpl, 0.5, threads));
  st.SetLabel("threads=" + std::to_string(threads));
}

void thread_args(benchmark::internal::Benchmark* b) {
  for (int kind : {0, 2, 3}) {
    for (int t = 1; t <= omp_get_num_procs(); t *= 2) b->Args({kind, t});
  }
}

void scan_thread_args(benchmark::internal::Benchmark* b) {
  for (int t = 1; t <= omp_get_num_procs(); t *= 2) b->Arg(t);
}

}  // namespace

BENCHMARK(BM_trials_serial)->Arg(0)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_trials_parallel)->Apply(thread_args)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_scan_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_scan_parallel)->Apply(scan_thread_args)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();

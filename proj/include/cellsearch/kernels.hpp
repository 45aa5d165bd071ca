#pragma once

#include <cstdint>
#include <vector>

#include "cellsearch/scenario.hpp"

namespace cellsearch {

/// Everything one trial needs, prepared once per scenario and shared
/// read-only by all workers.
class TrialKernel {
 public:
  explicit TrialKernel(Scenario scenario);

  /// Detection statistic of one trial at the true hypothesis. amplitude
  /// scales the unit-normalized channel; 0 gives a noise-only trial.
  double run(double amplitude, Rng& rng) const;
  double run_reduced(double amplitude, Rng& rng) const;
  double run_explicit(double amplitude, Rng& rng) const;

  const Scenario& scenario() const { return scenario_; }
  const std::vector<PssWaveform>& waveforms() const { return waveforms_; }

 private:
  ChannelRealization draw_channel(Rng& rng) const;
  cplx residual_factor(int slot) const;
  double reduced_digital(double amplitude, Rng& rng) const;
  double reduced_streams(double amplitude, Rng& rng) const;

  Scenario scenario_;
  std::vector<PssWaveform> waveforms_;
  TxBeamPolicy tx_;
};

/// Stream key of trial i is {seed, stream, point, i}, so results do not
/// depend on how trials are spread over threads.
struct TrialBatch {
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;  // scenario or calibration-key hash
  std::uint64_t point = 0;   // SNR index
  double amplitude = 0.0;
  long n_trials = 0;
};

std::vector<double> run_trials_serial(const TrialKernel& kernel, const TrialBatch& batch);
std::vector<double> run_trials_parallel(const TrialKernel& kernel, const TrialBatch& batch,
                                        int threads = 0);

}  // namespace cellsearch

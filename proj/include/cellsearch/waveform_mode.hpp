#pragma once

#include <vector>

#include "cellsearch/channel.hpp"
#include "cellsearch/glrt_detector.hpp"
#include "cellsearch/pss_signal.hpp"
#include "cellsearch/rx_frontend.hpp"

namespace cellsearch {

/// Sample-domain layout of a capture: one complex stream per sub-band at
/// 2 W_sig, covering n_slot periods plus one window of tail.
struct WaveformLayout {
  int n_sig = 0;
  int n_slot = 0;
  int period = 0;  // samples per T_per; also the number of delay hypotheses
  int window = 0;  // samples per sub-signal
  double fs = 0.0;

  long total_samples() const { return static_cast<long>(n_slot) * period + window; }
};

WaveformLayout make_layout(const PssConfig& cfg);

struct WaveformCapture {
  FrontendKind kind = FrontendKind::digital;
  WaveformLayout layout;
  std::vector<CMatrix> bands;  // n_sig blocks of rows x total_samples
};

struct CaptureDrive {
  const PssWaveform* waveform = nullptr;  // nullptr: noise only
  double delay_samples = 0.0;             // may be fractional
  double freq_offset_hz = 0.0;
  double amplitude = 1.0;
  double noise_psd = 1.0;
  std::vector<CVector> tx_weights;  // one per slot
  std::vector<CMatrix> rx_weights;  // one per slot, analog/hybrid only
};

/// Received samples: the PSS of each slot delayed by delay_samples (windowed
/// sinc interpolation for the fractional part), rotated by the frequency
/// offset, passed through the channel and combined by the frontend. The
/// receive beam switches on the receiver's own period boundaries.
WaveformCapture synthesize_capture(const FrontendSpec& spec, const WaveformLayout& layout,
                                   const ChannelRealization& channel, const CaptureDrive& drive,
                                   Rng& rng);

// Derotated, conjugated templates, index w * n_fo + f.
struct ScanTemplates {
  int n_fo = 0;
  int n_pss = 0;
  std::vector<CVector> conj;
};

ScanTemplates make_templates(const std::vector<PssWaveform>& waveforms,
                             const HypothesisGrid& grid, double fs);

/// Statistic of one (delay, frequency, waveform) hypothesis.
double scan_statistic(const WaveformCapture& cap, const ScanTemplates& tpl, const Hypothesis& h);

/// Full-grid scans. Both report the max-T hypothesis, ties going to the
/// lowest flat index ((w n_fo + f) n_dly + d), and count threshold
/// exceedances. The parallel version must match the serial one exactly.
SearchResult scan_serial(const WaveformCapture& cap, const ScanTemplates& tpl,
                         std::optional<double> threshold);
SearchResult scan_parallel(const WaveformCapture& cap, const ScanTemplates& tpl,
                           std::optional<double> threshold, int threads = 0);

}  // namespace cellsearch

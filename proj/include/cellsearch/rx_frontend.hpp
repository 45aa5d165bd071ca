#pragma once

#include <string>
#include <string_view>

#include "cellsearch/antenna_array.hpp"
#include "cellsearch/channel.hpp"
#include "cellsearch/pss_signal.hpp"
#include "cellsearch/rng.hpp"
#include "cellsearch/types.hpp"

namespace cellsearch {

enum class FrontendKind { digital, digital_q, analog, hybrid };

// surrogate: (1 - alpha) r + uncorrelated Gaussian error.
// physical: per-component uniform midrise quantizer with optimized step.
enum class QuantizerMode { surrogate, physical };

FrontendKind parse_frontend_kind(std::string_view name);
std::string to_string(FrontendKind kind);
bool is_digital(FrontendKind kind);

struct FrontendSpec {
  FrontendKind kind = FrontendKind::digital;
  int bits = 3;            // digital_q only
  int n_streams = 4;       // hybrid only; analog is always 1
  QuantizerMode quantizer = QuantizerMode::surrogate;
  double agc_backoff_db = 0.0;  // 0 = ideal AGC
  double p_fm_fj = 59.4;   // ADC figure of merit, fJ per conversion step

  // Rows of a slot observation: antennas for digital kinds, streams otherwise.
  int rows(int n_rx) const;
  double alpha() const;  // relative quantization error for `bits`
  void validate(int n_rx) const;  // throws ConfigError
};

/// One PSS slot as seen by the detector. Row i of `data` times p_l is the
/// matched-filter output of antenna (digital) or stream (analog/hybrid) i for
/// sub-signal l. Analog rows are w_s^H applied to the antenna-domain block.
struct SlotObservation {
  FrontendKind kind = FrontendKind::digital;
  int slot = 0;
  CMatrix data;        // rows x n_dim
  CMatrix rx_weights;  // n_rx x n_streams; empty for digital kinds
};

/// Independent random phase-only receive beams, one column per stream.
CMatrix random_rx_weights(const ArrayGeometry& ue, int n_streams, Rng& rng,
                          ElevationSampling sampling = ElevationSampling::sphere);

struct SlotDrive {
  const PssWaveform* waveform = nullptr;
  int slot = 0;
  int n_sig = 4;
  CVector w_tx;        // shared by every sub-signal of the slot
  CMatrix rx_weights;  // analog/hybrid only
  double amplitude = 1.0;  // multiplies the unit-normalized channel
  double noise_psd = 1.0;  // nu
};

/// Synthesizes the full received block of one slot:
/// R_k = amplitude sum_{l in J_k} (H_l w_tx) p_l^H + D_k, D_k ~ CN(0, nu),
/// followed by quantization (digital_q) or phase-only combining (analog,
/// hybrid).
SlotObservation observe_slot(const FrontendSpec& spec, const SlotDrive& drive,
                             const ChannelRealization& channel, Rng& rng);

/// Relative error alpha of a b-bit uniform quantizer with Gaussian input.
/// Bits 1..3 use the tabulated coding gains 4.4, 9.3 and 14.5 dB; larger
/// counts use the optimized uniform quantizer.
double coding_gain_alpha(int bits);

struct UniformQuantizer {
  int bits = 0;
  double step = 0.0;  // for unit-variance real Gaussian input
  double mse = 0.0;   // relative error at that step
};

// Step minimizing the mean-square error for N(0, 1) input, midrise levels.
UniformQuantizer optimal_uniform_quantizer(int bits);
double uniform_quantize(double x, int bits, double step);

/// Quantizes every antenna row of a digital observation. AGC normalizes each
/// row to its measured mean power, scaled by the configured backoff.
SlotObservation quantize(const SlotObservation& obs, const FrontendSpec& spec, Rng& rng);

/// gamma = (1 - alpha) gamma0 / (1 + alpha gamma0).
double effective_snr_after_quantization(double gamma0, double alpha);

/// P = N_r P_fm 2 W_tot 2^b, in watts (p_fm in joules).
double adc_power(int n_streams, double p_fm_joule, double w_tot_hz, int bits);

}  // namespace cellsearch

#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cellsearch/antenna_array.hpp"
#include "cellsearch/rng.hpp"
#include "cellsearch/types.hpp"

namespace cellsearch {

/// Raw synchronization-channel parameters as read from a config file.
/// Defaults are the reference design: 1 GHz total band, four 1 MHz
/// sub-signals in a 100 us slot every 5 ms, 50 slots per search, three
/// waveform hypotheses, 28 GHz carrier.
struct PssParams {
  double w_tot_hz = 1e9;
  double w_sig_hz = 1e6;
  double t_sig_s = 100e-6;
  double t_per_s = 5e-3;
  int n_sig = 4;
  int n_slot = 50;
  int n_pss = 3;
  double carrier_hz = 28e9;
  int n_dim = 1024;  // simulated signal-space dimension per slot
};

/// Validated synchronization-channel configuration plus derived quantities.
/// Build through build_config(); fields are not re-validated afterwards.
struct PssConfig {
  double w_tot_hz;
  double w_sig_hz;
  double t_sig_s;
  double t_per_s;
  int n_sig;
  int n_slot;
  int n_pss;
  double carrier_hz;
  int n_dim;

  int num_subsignals() const { return n_sig * n_slot; }    // L
  double overhead() const { return t_sig_s / t_per_s; }
  long delay_hypotheses() const;                           // 2 W_sig T_per
  int zc_length() const;            // Zadoff-Chu chips per sub-signal
  int samples_per_subsignal() const { return 2 * zc_length(); }  // at 2 W_sig
  double subband_center_hz(int j) const;                   // offset from carrier
};

PssConfig build_config(const PssParams& raw);

/// Slot bookkeeping for the sub-signal index l = 0..L-1. Slot k carries
/// l in [k n_sig, (k+1) n_sig) and occupies [k T_per, k T_per + T_sig].
class SubSignalIndexing {
 public:
  SubSignalIndexing(int n_sig, int n_slot);
  explicit SubSignalIndexing(const PssConfig& cfg) : SubSignalIndexing(cfg.n_sig, cfg.n_slot) {}

  int slot_of(int ell) const;
  std::vector<int> indices_in(int slot) const;
  int position_in_slot(int ell) const { return ell % n_sig_; }
  std::pair<double, double> interval(int slot, double t_per_s, double t_sig_s) const;

  int n_sig() const { return n_sig_; }
  int n_slot() const { return n_slot_; }
  int size() const { return n_sig_ * n_slot_; }

 private:
  int n_sig_;
  int n_slot_;
};

/// One PSS waveform hypothesis.
///
/// `coeffs` holds the n_sig sub-signal vectors in the slot signal space
/// (dimension n_dim). Sub-signal j lives in frequency block j of that space,
/// so the vectors of one slot are orthonormal. Every slot repeats the same
/// vectors. `time_samples` is the unit-energy sampled sub-signal at 2 W_sig
/// used by the waveform-domain receiver.
struct PssWaveform {
  int id = 0;
  int zc_root = 0;
  std::vector<CVector> coeffs;
  CVector time_samples;

  const CVector& subsignal(int position_in_slot) const { return coeffs.at(position_in_slot); }
};

/// Zadoff-Chu sequence of the given root, exp(-j pi u n (n + (N mod 2)) / N),
/// unit energy.
CVector zadoff_chu(int root, int length);

// Roots used for waveform ids 0, 1, 2, ... (the LTE PSS triple first).
std::vector<int> zadoff_chu_roots(int count, int length);

std::vector<PssWaveform> generate_waveforms(const PssConfig& cfg);

enum class TxMode { omni, random };

/// Transmit beam policy. Omni feeds a single element with unit weight. Random
/// steers toward a fresh direction every slot, scaled so the radiated power
/// equals the single-element omni case.
class TxBeamPolicy {
 public:
  TxBeamPolicy(TxMode mode, ArrayGeometry array,
               ElevationSampling sampling = ElevationSampling::sphere);

  TxMode mode() const { return mode_; }
  const ArrayGeometry& array() const { return array_; }

  // Weights for one slot; every sub-signal in the slot reuses them.
  CVector weights(Rng& rng) const;
  CVector steered(const Direction& dir) const;

 private:
  TxMode mode_;
  ArrayGeometry array_;
  ElevationSampling sampling_;
  Eigen::MatrixXd overlap_;
};

}  // namespace cellsearch

#pragma once

#include <optional>
#include <vector>

#include "cellsearch/pss_signal.hpp"
#include "cellsearch/rx_frontend.hpp"
#include "cellsearch/types.hpp"

namespace cellsearch {

/// Frequency uncertainty the search must cover: LO error plus Doppler.
struct FrequencyUncertainty {
  double lo_ppm = 1.0;
  double speed_mps = 30.0 / 3.6;
};

double doppler_hz(double speed_mps, double carrier_hz);

/// Delay x frequency x waveform grid searched by the detector.
struct HypothesisGrid {
  long n_dly = 0;
  int n_fo = 0;
  int n_pss = 0;
  double delay_step_s = 0.0;  // 1 / (2 W_sig)
  double freq_step_hz = 0.0;  // 1 / (4 T_sig)
  double max_offset_hz = 0.0;

  long size() const { return n_dly * n_fo * n_pss; }
  double delay_s(long d) const { return d * delay_step_s; }
  double freq_hz(int f) const { return (f - 0.5 * (n_fo - 1)) * freq_step_hz; }
};

// N_FO is 2 max_offset / step rounded to the nearest integer (at least 1).
HypothesisGrid make_grid(const PssConfig& cfg, const FrequencyUncertainty& fu);

struct Hypothesis {
  long delay = 0;
  int freq = 0;
  int waveform = 0;

  friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
};

struct DetectionStatistic {
  double T = 0.0;
  double energy = 0.0;
  double numerator = 0.0;  // sigma_max^2(V) or ||v||^2
  CMatrix V;               // digital only
  CVector v;               // analog / hybrid only
  CVector u_hat;           // digital only: dominant left singular vector
  Hypothesis hypothesis;
};

struct Eigenpair {
  double value = 0.0;
  CVector vector;
  int iterations = 0;
};

/// Largest eigenpair of a Hermitian positive semidefinite matrix by power
/// iteration on a trace-normalized power G^16, started from the column of
/// largest norm. The value is the Rayleigh quotient of G itself.
Eigenpair dominant_eigenpair(const CMatrix& gram, double tol = 1e-10, int max_iter = 2000);

/// sigma_max^2 and the left singular vector of V, through the smaller Gram
/// matrix.
Eigenpair dominant_left_singular(const CMatrix& V);

double observation_energy(const std::vector<SlotObservation>& obs);

// Column l = R_{slot(l)} p_l. Throws on analog input or mixed kinds.
CMatrix correlate_digital(const std::vector<SlotObservation>& obs, const PssWaveform& wf);

// Entry s L + l = <p_l, r^(s)_{slot(l)}>; streams are concatenated.
CVector correlate_analog(const std::vector<SlotObservation>& obs, const PssWaveform& wf);

DetectionStatistic statistic_digital(const CMatrix& V, double energy);
DetectionStatistic statistic_analog(const CVector& v, double energy);

// Dispatches on the observation kind.
DetectionStatistic compute_statistic(const std::vector<SlotObservation>& obs,
                                     const PssWaveform& wf);

/// Log generalized likelihood ratio computed the long way: maximum
/// likelihood estimates of the spatial signature, gains and noise level
/// under both hypotheses, explicit residuals and Gaussian log densities.
/// Test oracle only; never used by the detector.
double glrt_lambda_oracle(const std::vector<SlotObservation>& obs, const PssWaveform& wf);

/// Monotone map from T to Lambda: -n_slot rows n_dim log(1 - T), where rows
/// is N_rx for digital and the stream count otherwise.
double lambda_from_statistic(double T, int n_slot, int rows, int n_dim);

struct SearchResult {
  bool detected = false;
  double T = 0.0;
  Hypothesis best;
  long evaluated = 0;
  long exceedances = 0;  // hypotheses with T >= threshold
};

/// Coefficient-mode search. Fast mode evaluates only the true waveform;
/// full mode scans every waveform. Delays and frequencies are implicit in
/// the coefficient representation (the observation is already aligned).
SearchResult search_fast(const std::vector<SlotObservation>& obs, const PssWaveform& truth,
                         std::optional<double> threshold);
SearchResult search_waveforms(const std::vector<SlotObservation>& obs,
                              const std::vector<PssWaveform>& waveforms,
                              std::optional<double> threshold);

}  // namespace cellsearch

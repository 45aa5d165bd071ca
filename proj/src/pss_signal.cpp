#include "cellsearch/pss_signal.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "cellsearch/errors.hpp"

namespace cellsearch {

namespace {

void require_positive(double value, const char* key) {
  if (!(value > 0.0)) throw ConfigError(std::string(key) + " must be positive");
}

}  // namespace

long PssConfig::delay_hypotheses() const {
  return std::lround(2.0 * w_sig_hz * t_per_s);
}

int PssConfig::zc_length() const {
  const int chips = static_cast<int>(std::floor(w_sig_hz * t_sig_s + 1e-9));
  // Chips must fit into one frequency block of the slot signal space.
  return std::max(1, std::min(chips, n_dim / n_sig));
}

double PssConfig::subband_center_hz(int j) const {
  // Sub-bands spread uniformly across the total band.
  return -0.5 * w_tot_hz + (j + 0.5) * w_tot_hz / n_sig;
}

PssConfig build_config(const PssParams& raw) {
  require_positive(raw.w_tot_hz, "w_tot_hz");
  require_positive(raw.w_sig_hz, "w_sig_hz");
  require_positive(raw.t_sig_s, "t_sig_s");
  require_positive(raw.t_per_s, "t_per_s");
  require_positive(raw.carrier_hz, "carrier_hz");
  if (raw.n_sig < 1) throw ConfigError("n_sig must be at least 1");
  if (raw.n_slot < 1) throw ConfigError("n_slot must be at least 1");
  if (raw.n_pss < 1) throw ConfigError("n_pss must be at least 1");
  if (!(raw.t_sig_s < raw.t_per_s)) {
    throw ConfigError("t_sig_s must be strictly smaller than t_per_s");
  }
  if (raw.n_sig * raw.w_sig_hz > raw.w_tot_hz * (1.0 + 1e-12)) {
    throw ConfigError("n_sig * w_sig_hz exceeds w_tot_hz");
  }
  if (raw.n_dim < raw.n_sig) {
    throw ConfigError("n_dim (" + std::to_string(raw.n_dim) + ") must be at least n_sig (" +
                      std::to_string(raw.n_sig) + ")");
  }
  return PssConfig{raw.w_tot_hz, raw.w_sig_hz, raw.t_sig_s, raw.t_per_s, raw.n_sig,
                   raw.n_slot,   raw.n_pss,    raw.carrier_hz, raw.n_dim};
}

SubSignalIndexing::SubSignalIndexing(int n_sig, int n_slot) : n_sig_(n_sig), n_slot_(n_slot) {
  if (n_sig < 1 || n_slot < 1) throw ConfigError("sub-signal indexing needs n_sig, n_slot >= 1");
}

int SubSignalIndexing::slot_of(int ell) const {
  if (ell < 0 || ell >= size()) {
    throw std::out_of_range("sub-signal index " + std::to_string(ell) + " outside [0, " +
                            std::to_string(size()) + ")");
  }
  return ell / n_sig_;
}

std::vector<int> SubSignalIndexing::indices_in(int slot) const {
  if (slot < 0 || slot >= n_slot_) throw std::out_of_range("slot index out of range");
  std::vector<int> out(n_sig_);
  std::iota(out.begin(), out.end(), slot * n_sig_);
  return out;
}

std::pair<double, double> SubSignalIndexing::interval(int slot, double t_per_s,
                                                      double t_sig_s) const {
  if (slot < 0 || slot >= n_slot_) throw std::out_of_range("slot index out of range");
  return {slot * t_per_s, slot * t_per_s + t_sig_s};
}

CVector zadoff_chu(int root, int length) {
  CVector x(length);
  const double scale = 1.0 / std::sqrt(static_cast<double>(length));
  const long parity = length % 2;
  for (long n = 0; n < length; ++n) {
    // Reduce the quadratic index before converting to a phase.
    const long q = (static_cast<long>(root) * n * (n + parity)) % (2L * length);
    x(n) = std::polar(scale, -kPi * static_cast<double>(q) / length);
  }
  return x;
}

std::vector<int> zadoff_chu_roots(int count, int length) {
  std::vector<int> roots;
  for (int r : {25, 29, 34}) {
    if (static_cast<int>(roots.size()) == count) break;
    if (r < length && std::gcd(r, length) == 1) roots.push_back(r);
  }
  // Extra roots: smallest admissible ones whose pairwise correlation with the
  // already-chosen set stays within 0.3.
  for (int r = 1; static_cast<int>(roots.size()) < count && r < length; ++r) {
    if (std::gcd(r, length) != 1) continue;
    if (std::find(roots.begin(), roots.end(), r) != roots.end()) continue;
    const CVector candidate = zadoff_chu(r, length);
    bool ok = true;
    for (int chosen : roots) {
      if (std::abs(candidate.dot(zadoff_chu(chosen, length))) > 0.3) {
        ok = false;
        break;
      }
    }
    if (ok) roots.push_back(r);
  }
  // Short sequences may not admit enough well-separated roots; fall back to
  // any distinct root rather than failing.
  for (int r = 1; static_cast<int>(roots.size()) < count && r < length; ++r) {
    if (std::find(roots.begin(), roots.end(), r) == roots.end()) roots.push_back(r);
  }
  if (static_cast<int>(roots.size()) < count) {
    throw ConfigError("n_pss = " + std::to_string(count) +
                      " exceeds the number of distinct Zadoff-Chu roots of length " +
                      std::to_string(length));
  }
  return roots;
}

std::vector<PssWaveform> generate_waveforms(const PssConfig& cfg) {
  const int nzc = cfg.zc_length();
  const int block = cfg.n_dim / cfg.n_sig;
  const std::vector<int> roots = zadoff_chu_roots(cfg.n_pss, std::max(nzc, 2));

  std::vector<PssWaveform> out;
  out.reserve(cfg.n_pss);
  for (int w = 0; w < cfg.n_pss; ++w) {
    PssWaveform wf;
    wf.id = w;
    wf.zc_root = roots[w];
    const CVector chips = nzc >= 2 ? zadoff_chu(roots[w], nzc) : CVector::Ones(1);
    for (int j = 0; j < cfg.n_sig; ++j) {
      CVector p = CVector::Zero(cfg.n_dim);
      p.segment(j * block, nzc) = chips;
      wf.coeffs.push_back(std::move(p));
    }
    // Rectangular chips held for two samples at 2 W_sig.
    wf.time_samples.resize(2 * nzc);
    for (int n = 0; n < nzc; ++n) {
      wf.time_samples(2 * n) = chips(n) / std::sqrt(2.0);
      wf.time_samples(2 * n + 1) = chips(n) / std::sqrt(2.0);
    }
    out.push_back(std::move(wf));
  }
  return out;
}

TxBeamPolicy::TxBeamPolicy(TxMode mode, ArrayGeometry array, ElevationSampling sampling)
    : mode_(mode), array_(array), sampling_(sampling), overlap_(radiation_overlap(array)) {
  array_.validate();
}

CVector TxBeamPolicy::steered(const Direction& dir) const {
  CVector w = steering_vector(array_, dir);
  return w / std::sqrt(radiated_power(overlap_, w));
}

CVector TxBeamPolicy::weights(Rng& rng) const {
  if (mode_ == TxMode::omni) {
    CVector w = CVector::Zero(array_.size());
    w(0) = 1.0;
    return w;
  }
  return steered(random_direction(rng, sampling_));
}

}  // namespace cellsearch

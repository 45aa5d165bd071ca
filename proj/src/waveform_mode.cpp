#include "cellsearch/waveform_mode.hpp"

#include <algorithm>
#include <cmath>

#include <omp.h>

#include "cellsearch/errors.hpp"

namespace cellsearch {

namespace {

constexpr int kSincHalf = 16;

// Blackman-windowed sinc tap at offset x (samples).
double interp_tap(double x) {
  if (std::abs(x) >= kSincHalf) return 0.0;
  const double w = 0.42 + 0.5 * std::cos(kPi * x / kSincHalf) + 0.08 * std::cos(2.0 * kPi * x / kSincHalf);
  if (std::abs(x) < 1e-12) return w;
  return w * std::sin(kPi * x) / (kPi * x);
}

// Sliding-window energy summed over slots, bands and rows, for every delay.
std::vector<double> window_energies(const WaveformCapture& cap) {
  const auto& lay = cap.layout;
  std::vector<double> e(lay.period, 0.0);
  std::vector<double> prefix(lay.total_samples() + 1);
  for (const CMatrix& band : cap.bands) {
    for (Eigen::Index r = 0; r < band.rows(); ++r) {
      prefix[0] = 0.0;
      for (long m = 0; m < lay.total_samples(); ++m) prefix[m + 1] = prefix[m] + std::norm(band(r, m));
      for (int k = 0; k < lay.n_slot; ++k) {
        const long base = static_cast<long>(k) * lay.period;
        for (int d = 0; d < lay.period; ++d) {
          e[d] += prefix[base + d + lay.window] - prefix[base + d];
        }
      }
    }
  }
  // Checked here so the scan loops, which may run inside a parallel
  // region, never throw.
  for (double x : e) {
    if (!(x > 0.0)) throw DegenerateObservation("capture window has no energy");
  }
  return e;
}

double statistic_at(const WaveformCapture& cap, const ScanTemplates& tpl, const Hypothesis& h,
                    double energy, CMatrix& V) {
  const auto& lay = cap.layout;
  const CVector& t = tpl.conj[static_cast<std::size_t>(h.waveform) * tpl.n_fo + h.freq];
  for (int k = 0; k < lay.n_slot; ++k) {
    const long start = static_cast<long>(k) * lay.period + h.delay;
    for (int j = 0; j < lay.n_sig; ++j) {
      V.col(k * lay.n_sig + j).noalias() = cap.bands[j].middleCols(start, lay.window) * t;
    }
  }
  if (!(energy > 0.0)) throw DegenerateObservation("capture window has no energy");
  const double num = is_digital(cap.kind) ? dominant_left_singular(V).value : V.squaredNorm();
  return std::clamp(num / energy, 0.0, 1.0);
}

Hypothesis unflatten(long idx, const WaveformCapture& cap, const ScanTemplates& tpl) {
  const long n_dly = cap.layout.period;
  Hypothesis h;
  h.delay = idx % n_dly;
  const long wf = idx / n_dly;
  h.freq = static_cast<int>(wf % tpl.n_fo);
  h.waveform = static_cast<int>(wf / tpl.n_fo);
  return h;
}

void check_scan(const WaveformCapture& cap, const ScanTemplates& tpl) {
  if (static_cast<int>(cap.bands.size()) != cap.layout.n_sig) throw DimensionError("capture band count");
  if (tpl.conj.empty()) throw std::invalid_argument("no scan templates");
  if (tpl.conj.front().size() != cap.layout.window) throw DimensionError("template length differs from window");
}

}  // namespace

WaveformLayout make_layout(const PssConfig& cfg) {
  WaveformLayout lay;
  lay.n_sig = cfg.n_sig;
  lay.n_slot = cfg.n_slot;
  lay.period = static_cast<int>(cfg.delay_hypotheses());
  lay.window = cfg.samples_per_subsignal();
  lay.fs = 2.0 * cfg.w_sig_hz;
  if (lay.window > lay.period) throw ConfigError("sub-signal window longer than the slot period");
  return lay;
}

WaveformCapture synthesize_capture(const FrontendSpec& spec, const WaveformLayout& layout,
                                   const ChannelRealization& channel, const CaptureDrive& drive,
                                   Rng& rng) {
  if (spec.kind == FrontendKind::digital_q) {
    throw std::invalid_argument("waveform mode does not model quantization");
  }
  const int n_rx = channel.n_rx;
  const long total = layout.total_samples();
  const bool digital = is_digital(spec.kind);
  const int rows = spec.rows(n_rx);
  if (!digital && static_cast<int>(drive.rx_weights.size()) != layout.n_slot) {
    throw DimensionError("need one receive weight matrix per slot");
  }
  if (drive.waveform && static_cast<int>(drive.tx_weights.size()) != layout.n_slot) {
    throw DimensionError("need one transmit weight vector per slot");
  }

  // Delayed pulse: integer shift plus fractional interpolation.
  std::vector<cplx> pulse;
  long pulse_start = 0;
  if (drive.waveform) {
    const CVector& s = drive.waveform->time_samples;
    if (s.size() != layout.window) throw DimensionError("waveform samples differ from window");
    const double whole = std::floor(drive.delay_samples);
    const double frac = drive.delay_samples - whole;
    const int pad = frac == 0.0 ? 0 : kSincHalf;
    pulse.assign(s.size() + 2 * pad, cplx{0.0, 0.0});
    pulse_start = static_cast<long>(whole) - pad;
    for (std::size_t m = 0; m < pulse.size(); ++m) {
      const double pos = static_cast<double>(m) - pad - frac;  // position in the undelayed pulse
      if (frac == 0.0) {
        pulse[m] = s(static_cast<Eigen::Index>(m));
        continue;
      }
      cplx acc{0.0, 0.0};
      const long lo = std::max(0L, static_cast<long>(std::floor(pos)) - kSincHalf + 1);
      const long hi = std::min<long>(s.size() - 1, static_cast<long>(std::ceil(pos)) + kSincHalf - 1);
      for (long n = lo; n <= hi; ++n) acc += s(n) * interp_tap(pos - n);
      pulse[m] = acc;
    }
  }

  WaveformCapture cap;
  cap.kind = spec.kind;
  cap.layout = layout;
  const double sd = std::sqrt(drive.noise_psd / 2.0);
  for (int j = 0; j < layout.n_sig; ++j) {
    CMatrix x(n_rx, total);
    for (long m = 0; m < total; ++m) {
      for (int i = 0; i < n_rx; ++i) x(i, m) = cplx(sd * rng.normal(), sd * rng.normal());
    }
    if (drive.waveform) {
      for (int k = 0; k < layout.n_slot; ++k) {
        const int ell = k * layout.n_sig + j;
        const CVector h = drive.amplitude * effective_gain_digital(channel, drive.tx_weights[k], ell).response;
        const long base = static_cast<long>(k) * layout.period + pulse_start;
        for (std::size_t m = 0; m < pulse.size(); ++m) {
          const long at = base + static_cast<long>(m);
          if (at < 0 || at >= total) continue;
          const cplx rot = std::polar(1.0, 2.0 * kPi * drive.freq_offset_hz * at / layout.fs);
          x.col(at) += h * (pulse[m] * rot);
        }
      }
    }
    if (digital) {
      cap.bands.push_back(std::move(x));
      continue;
    }
    CMatrix y(rows, total);
    for (long m = 0; m < total; ++m) {
      const int k = static_cast<int>(std::min<long>(m / layout.period, layout.n_slot - 1));
      y.col(m).noalias() = drive.rx_weights[k].adjoint() * x.col(m);
    }
    cap.bands.push_back(std::move(y));
  }
  return cap;
}

ScanTemplates make_templates(const std::vector<PssWaveform>& waveforms, const HypothesisGrid& grid,
                             double fs) {
  ScanTemplates tpl;
  tpl.n_fo = grid.n_fo;
  tpl.n_pss = static_cast<int>(waveforms.size());
  for (const auto& wf : waveforms) {
    const CVector& s = wf.time_samples;
    for (int f = 0; f < grid.n_fo; ++f) {
      CVector t(s.size());
      for (Eigen::Index n = 0; n < s.size(); ++n) {
        t(n) = std::conj(s(n) * std::polar(1.0, 2.0 * kPi * grid.freq_hz(f) * n / fs));
      }
      tpl.conj.push_back(t / s.norm());
    }
  }
  return tpl;
}

double scan_statistic(const WaveformCapture& cap, const ScanTemplates& tpl, const Hypothesis& h) {
  check_scan(cap, tpl);
  const auto& lay = cap.layout;
  if (h.delay < 0 || h.delay >= lay.period) throw std::out_of_range("delay hypothesis out of range");
  double energy = 0.0;
  for (const CMatrix& band : cap.bands) {
    for (int k = 0; k < lay.n_slot; ++k) {
      energy += band.middleCols(static_cast<long>(k) * lay.period + h.delay, lay.window).squaredNorm();
    }
  }
  CMatrix V(cap.bands.front().rows(), lay.n_slot * lay.n_sig);
  return statistic_at(cap, tpl, h, energy, V);
}

SearchResult scan_serial(const WaveformCapture& cap, const ScanTemplates& tpl,
                         std::optional<double> threshold) {
  if (!threshold) throw CalibrationError("no calibrated threshold for this observation kind");
  check_scan(cap, tpl);
  const std::vector<double> energy = window_energies(cap);
  const long n = static_cast<long>(cap.layout.period) * tpl.n_fo * tpl.n_pss;
  CMatrix V(cap.bands.front().rows(), cap.layout.n_slot * cap.layout.n_sig);
  SearchResult r;
  r.T = -1.0;
  long best = 0;
  for (long idx = 0; idx < n; ++idx) {
    const Hypothesis h = unflatten(idx, cap, tpl);
    const double T = statistic_at(cap, tpl, h, energy[h.delay], V);
    if (T >= *threshold) ++r.exceedances;
    if (T > r.T) {
      r.T = T;
      best = idx;
    }
  }
  r.evaluated = n;
  r.best = unflatten(best, cap, tpl);
  r.detected = r.T >= *threshold;
  return r;
}

SearchResult scan_parallel(const WaveformCapture& cap, const ScanTemplates& tpl,
                           std::optional<double> threshold, int threads) {
  if (!threshold) throw CalibrationError("no calibrated threshold for this observation kind");
  check_scan(cap, tpl);
  const std::vector<double> energy = window_energies(cap);
  const long n = static_cast<long>(cap.layout.period) * tpl.n_fo * tpl.n_pss;
  const double t = *threshold;
  const Eigen::Index rows = cap.bands.front().rows();
  const int L = cap.layout.n_slot * cap.layout.n_sig;

  double best_T = -1.0;
  long best_idx = 0;
  long exceed = 0;
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel num_threads(nthreads) reduction(+ : exceed)
  {
    CMatrix V(rows, L);
    double local_T = -1.0;
    long local_idx = 0;
#pragma omp for schedule(static)
    for (long idx = 0; idx < n; ++idx) {
      const Hypothesis h = unflatten(idx, cap, tpl);
      const double T = statistic_at(cap, tpl, h, energy[h.delay], V);
      if (T >= t) ++exceed;
      if (T > local_T) {
        local_T = T;
        local_idx = idx;
      }
    }
#pragma omp critical(cellsearch_scan_merge)
    {
      if (local_T > best_T || (local_T == best_T && local_idx < best_idx)) {
        best_T = local_T;
        best_idx = local_idx;
      }
    }
  }
  SearchResult r;
  r.T = best_T;
  r.best = unflatten(best_idx, cap, tpl);
  r.evaluated = n;
  r.exceedances = exceed;
  r.detected = best_T >= t;
  return r;
}

}  // namespace cellsearch

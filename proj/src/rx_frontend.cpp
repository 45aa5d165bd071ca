#include "cellsearch/rx_frontend.hpp"

#include <array>
#include <cmath>
#include <mutex>

#include "cellsearch/errors.hpp"

namespace cellsearch {

namespace {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }
double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// E (X - Q(X))^2 for X ~ N(0, 1) and a midrise quantizer with 2^bits levels.
double gaussian_mse(int bits, double step) {
  const int half = 1 << (bits - 1);
  double mse = 0.0;
  for (int i = -half; i < half; ++i) {
    const double lo = i == -half ? -INFINITY : i * step;
    const double hi = i == half - 1 ? INFINITY : (i + 1) * step;
    const double c = (i + 0.5) * step;
    const double mass = Phi(hi) - Phi(lo);
    const double lo_term = std::isinf(lo) ? 0.0 : lo * phi(lo);
    const double hi_term = std::isinf(hi) ? 0.0 : hi * phi(hi);
    const double second = mass - hi_term + lo_term;  // int x^2 phi
    const double first = phi(lo) - phi(hi);          // int x phi
    mse += second - 2.0 * c * first + c * c * mass;
  }
  return mse;
}

}  // namespace

FrontendKind parse_frontend_kind(std::string_view name) {
  if (name == "digital") return FrontendKind::digital;
  if (name == "digital_q") return FrontendKind::digital_q;
  if (name == "analog") return FrontendKind::analog;
  if (name == "hybrid") return FrontendKind::hybrid;
  throw ConfigError("frontend.kind: unknown value '" + std::string(name) + "'");
}

std::string to_string(FrontendKind kind) {
  switch (kind) {
    case FrontendKind::digital: return "digital";
    case FrontendKind::digital_q: return "digital_q";
    case FrontendKind::analog: return "analog";
    case FrontendKind::hybrid: return "hybrid";
  }
  return "unknown";
}

bool is_digital(FrontendKind kind) {
  return kind == FrontendKind::digital || kind == FrontendKind::digital_q;
}

int FrontendSpec::rows(int n_rx) const {
  switch (kind) {
    case FrontendKind::digital:
    case FrontendKind::digital_q: return n_rx;
    case FrontendKind::analog: return 1;
    case FrontendKind::hybrid: return n_streams;
  }
  return 0;
}

double FrontendSpec::alpha() const { return coding_gain_alpha(bits); }

void FrontendSpec::validate(int n_rx) const {
  if (kind == FrontendKind::digital_q && (bits < 1 || bits > 16)) {
    throw ConfigError("frontend.bits must be in [1, 16]");
  }
  if (kind == FrontendKind::hybrid && (n_streams < 1 || n_streams > n_rx)) {
    throw ConfigError("frontend.n_streams must be in [1, " + std::to_string(n_rx) + "]");
  }
  if (!(p_fm_fj > 0.0)) throw ConfigError("frontend.p_fm_fj must be positive");
  if (!std::isfinite(agc_backoff_db)) throw ConfigError("frontend.agc_backoff_db must be finite");
}

CMatrix random_rx_weights(const ArrayGeometry& ue, int n_streams, Rng& rng,
                          ElevationSampling sampling) {
  CMatrix w(ue.size(), n_streams);
  for (int s = 0; s < n_streams; ++s) w.col(s) = steering_vector(ue, random_direction(rng, sampling));
  return w;
}

SlotObservation observe_slot(const FrontendSpec& spec, const SlotDrive& drive,
                             const ChannelRealization& channel, Rng& rng) {
  if (drive.waveform == nullptr) throw std::invalid_argument("observe_slot: no waveform");
  if (!(drive.noise_psd > 0.0)) throw std::invalid_argument("observe_slot: noise_psd must be positive");
  const auto& coeffs = drive.waveform->coeffs;
  if (static_cast<int>(coeffs.size()) != drive.n_sig) {
    throw DimensionError("waveform has " + std::to_string(coeffs.size()) +
                         " sub-signals per slot, expected " + std::to_string(drive.n_sig));
  }
  const int n_rx = channel.n_rx;
  const int n_dim = static_cast<int>(coeffs.front().size());

  CMatrix r(n_rx, n_dim);
  const double sd = std::sqrt(drive.noise_psd / 2.0);
  for (Eigen::Index j = 0; j < r.cols(); ++j) {
    for (Eigen::Index i = 0; i < r.rows(); ++i) r(i, j) = cplx(sd * rng.normal(), sd * rng.normal());
  }
  const auto c = tx_projections(channel, drive.w_tx);
  for (int pos = 0; pos < drive.n_sig; ++pos) {
    const int ell = drive.slot * drive.n_sig + pos;
    const CVector h = drive.amplitude * response_from_projections(channel, c, ell);
    r.noalias() += h * coeffs[pos].adjoint();
  }

  SlotObservation obs;
  obs.kind = spec.kind;
  obs.slot = drive.slot;
  switch (spec.kind) {
    case FrontendKind::digital:
      obs.data = std::move(r);
      break;
    case FrontendKind::digital_q:
      obs.data = std::move(r);
      obs = quantize(obs, spec, rng);
      break;
    case FrontendKind::analog:
    case FrontendKind::hybrid: {
      const int streams = spec.rows(n_rx);
      if (drive.rx_weights.rows() != n_rx || drive.rx_weights.cols() != streams) {
        throw DimensionError("rx_weights must be " + std::to_string(n_rx) + " x " +
                             std::to_string(streams));
      }
      obs.data = drive.rx_weights.adjoint() * r;
      obs.rx_weights = drive.rx_weights;
      break;
    }
  }
  return obs;
}

double coding_gain_alpha(int bits) {
  if (bits < 1) throw ConfigError("quantizer bits must be at least 1");
  static constexpr std::array<double, 3> kTableDb{4.4, 9.3, 14.5};
  if (bits <= 3) return std::pow(10.0, -kTableDb[bits - 1] / 10.0);
  return optimal_uniform_quantizer(bits).mse;
}

UniformQuantizer optimal_uniform_quantizer(int bits) {
  if (bits < 1 || bits > 16) throw ConfigError("quantizer bits must be in [1, 16]");
  static std::array<UniformQuantizer, 17> cache{};
  static std::mutex mu;
  std::lock_guard lock(mu);
  if (cache[bits].bits == bits) return cache[bits];

  // The MSE is unimodal in the step; golden-section search on a bracket
  // that scales with the level count.
  double lo = 1e-4, hi = 8.0 / (1 << (bits - 1)) + 2.0;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - inv_phi * (hi - lo), b = lo + inv_phi * (hi - lo);
  double fa = gaussian_mse(bits, a), fb = gaussian_mse(bits, b);
  while (hi - lo > 1e-12 * (1.0 + hi)) {
    if (fa < fb) {
      hi = b; b = a; fb = fa;
      a = hi - inv_phi * (hi - lo);
      fa = gaussian_mse(bits, a);
    } else {
      lo = a; a = b; fa = fb;
      b = lo + inv_phi * (hi - lo);
      fb = gaussian_mse(bits, b);
    }
  }
  const double step = 0.5 * (lo + hi);
  cache[bits] = {bits, step, gaussian_mse(bits, step)};
  return cache[bits];
}

double uniform_quantize(double x, int bits, double step) {
  const double half = static_cast<double>(1 << (bits - 1));
  const double idx = std::clamp(std::floor(x / step), -half, half - 1.0);
  return (idx + 0.5) * step;
}

SlotObservation quantize(const SlotObservation& obs, const FrontendSpec& spec, Rng& rng) {
  if (!is_digital(obs.kind)) throw std::invalid_argument("quantize: analog observations are not digitized per antenna");
  SlotObservation out = obs;
  const double backoff = std::pow(10.0, spec.agc_backoff_db / 10.0);
  const Eigen::Index n = obs.data.cols();
  if (spec.quantizer == QuantizerMode::surrogate) {
    const double a = spec.alpha();
    for (Eigen::Index i = 0; i < obs.data.rows(); ++i) {
      const double p = obs.data.row(i).squaredNorm() / static_cast<double>(n);
      const double var = a * (1.0 - a) * p;
      for (Eigen::Index j = 0; j < n; ++j) {
        out.data(i, j) = (1.0 - a) * obs.data(i, j) + rng.complex_normal(var);
      }
    }
  } else {
    const UniformQuantizer q = optimal_uniform_quantizer(spec.bits);
    for (Eigen::Index i = 0; i < obs.data.rows(); ++i) {
      const double p = obs.data.row(i).squaredNorm() / static_cast<double>(n);
      const double sigma = std::sqrt(p * backoff / 2.0);  // per real component
      if (sigma == 0.0) continue;
      const double step = q.step * sigma;
      for (Eigen::Index j = 0; j < n; ++j) {
        out.data(i, j) = cplx(uniform_quantize(obs.data(i, j).real(), spec.bits, step),
                              uniform_quantize(obs.data(i, j).imag(), spec.bits, step));
      }
    }
  }
  return out;
}

double effective_snr_after_quantization(double gamma0, double alpha) {
  return (1.0 - alpha) * gamma0 / (1.0 + alpha * gamma0);
}

double adc_power(int n_streams, double p_fm_joule, double w_tot_hz, int bits) {
  return n_streams * p_fm_joule * 2.0 * w_tot_hz * std::ldexp(1.0, bits);
}

}  // namespace cellsearch

#include "cellsearch/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include <omp.h>

#include "cellsearch/errors.hpp"
#include "cellsearch/glrt_detector.hpp"

namespace cellsearch {

namespace {

constexpr double kNoisePsd = 1.0;

CVector noise_vector(Eigen::Index n, Rng& rng) {
  CVector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = rng.complex_normal(kNoisePsd);
  return x;
}

double gamma_or_zero(Rng& rng, long shape) {
  return shape > 0 ? rng.gamma(static_cast<double>(shape)) : 0.0;
}

}  // namespace

void Scenario::validate() const {
  bs.validate();
  ue.validate();
  frontend.validate(ue.size());
  if (channel_mode == ChannelMode::multipath) multipath.validate();
  if (frontend.kind == FrontendKind::digital_q && frontend.quantizer == QuantizerMode::physical &&
      slot_model == SlotModel::reduced) {
    throw ConfigError("frontend.quantizer = physical needs experiment.slot_model = explicit");
  }
  if (!std::isfinite(residual_offset_hz)) throw ConfigError("experiment.residual_offset_hz must be finite");
}

TrialKernel::TrialKernel(Scenario scenario)
    : scenario_(std::move(scenario)),
      waveforms_(generate_waveforms(scenario_.pss)),
      tx_(scenario_.tx_mode, scenario_.bs, scenario_.sampling) {
  scenario_.validate();
}

ChannelRealization TrialKernel::draw_channel(Rng& rng) const {
  ChannelDrawSpec spec;
  spec.num_subsignals = scenario_.pss.num_subsignals();
  spec.n_sig = scenario_.pss.n_sig;
  spec.fading = scenario_.fading;
  spec.sampling = scenario_.sampling;
  if (scenario_.channel_mode == ChannelMode::single) return draw_single_path(scenario_.bs, scenario_.ue, spec, rng);
  return draw_multipath(scenario_.multipath, scenario_.bs, scenario_.ue, spec, rng);
}

cplx TrialKernel::residual_factor(int slot) const {
  const double df = scenario_.residual_offset_hz;
  if (df == 0.0) return {1.0, 0.0};
  // Decoherence within one sub-signal and the phase drift between slots.
  const double x = kPi * df * scenario_.pss.t_sig_s;
  return std::polar(std::sin(x) / x, 2.0 * kPi * df * slot * scenario_.pss.t_per_s);
}

double TrialKernel::run(double amplitude, Rng& rng) const {
  return scenario_.slot_model == SlotModel::reduced ? run_reduced(amplitude, rng)
                                                    : run_explicit(amplitude, rng);
}

double TrialKernel::run_reduced(double amplitude, Rng& rng) const {
  return is_digital(scenario_.frontend.kind) ? reduced_digital(amplitude, rng)
                                             : reduced_streams(amplitude, rng);
}

double TrialKernel::reduced_digital(double amplitude, Rng& rng) const {
  const PssConfig& cfg = scenario_.pss;
  const int n_rx = scenario_.ue.size();
  const int L = cfg.num_subsignals();
  const long dof = cfg.n_dim - cfg.n_sig;  // per antenna and slot, outside the PSS subspace
  const bool with_signal = amplitude != 0.0;
  ChannelRealization ch;
  if (with_signal) ch = draw_channel(rng);

  CMatrix V(n_rx, L);
  for (int k = 0; k < cfg.n_slot; ++k) {
    std::vector<cplx> c;
    cplx f{1.0, 0.0};
    if (with_signal) {
      c = tx_projections(ch, tx_.weights(rng));
      f = amplitude * residual_factor(k);
    }
    for (int j = 0; j < cfg.n_sig; ++j) {
      const int ell = k * cfg.n_sig + j;
      V.col(ell) = noise_vector(n_rx, rng);
      if (with_signal) V.col(ell) += f * response_from_projections(ch, c, ell);
    }
  }

  double energy = 0.0;
  if (scenario_.frontend.kind == FrontendKind::digital) {
    energy = V.squaredNorm() + kNoisePsd * gamma_or_zero(rng, static_cast<long>(cfg.n_slot) * n_rx * dof);
  } else {
    // Surrogate quantizer per antenna and slot with AGC at the measured
    // power. Rotating the out-of-subspace residual onto one axis keeps its
    // quantized energy exact: |(1-a) sqrt(X) + c_1|^2 + sum_{d>1} |c_d|^2.
    const double a = scenario_.frontend.alpha();
    for (int k = 0; k < cfg.n_slot; ++k) {
      for (int i = 0; i < n_rx; ++i) {
        const double x = kNoisePsd * gamma_or_zero(rng, dof);
        double in_band = 0.0;
        for (int j = 0; j < cfg.n_sig; ++j) in_band += std::norm(V(i, k * cfg.n_sig + j));
        const double var = a * (1.0 - a) * (in_band + x) / cfg.n_dim;
        for (int j = 0; j < cfg.n_sig; ++j) {
          cplx& e = V(i, k * cfg.n_sig + j);
          e = (1.0 - a) * e + rng.complex_normal(var);
        }
        if (dof > 0) {
          energy += std::norm((1.0 - a) * std::sqrt(x) + rng.complex_normal(var)) + var * gamma_or_zero(rng, dof - 1);
        }
      }
    }
    energy += V.squaredNorm();
  }
  if (!(energy > 0.0)) throw DegenerateObservation("trial produced zero energy");
  return std::clamp(dominant_left_singular(V).value / energy, 0.0, 1.0);
}

double TrialKernel::reduced_streams(double amplitude, Rng& rng) const {
  const PssConfig& cfg = scenario_.pss;
  const int n_rx = scenario_.ue.size();
  const int S = scenario_.frontend.rows(n_rx);
  const long dof = cfg.n_dim - cfg.n_sig;
  const bool with_signal = amplitude != 0.0;
  ChannelRealization ch;
  if (with_signal) ch = draw_channel(rng);

  double numerator = 0.0, residual = 0.0;
  CVector noise(S), z(S);
  for (int k = 0; k < cfg.n_slot; ++k) {
    const CMatrix W = random_rx_weights(scenario_.ue, S, rng, scenario_.sampling);
    std::vector<cplx> c;
    cplx f{1.0, 0.0};
    if (with_signal) {
      c = tx_projections(ch, tx_.weights(rng));
      f = amplitude * residual_factor(k);
    }
    // Combined noise W^H n is CN(0, nu W^H W); draw it through the
    // eigendecomposition of the S x S Gram matrix instead of per antenna.
    // Outside the PSS subspace the same covariance gives an
    // eigenvalue-weighted sum of Gammas.
    Eigen::VectorXd lambda(S);
    CMatrix root(S, S);
    if (S == 1) {
      lambda(0) = W.col(0).squaredNorm();
      root(0, 0) = std::sqrt(lambda(0));
    } else {
      const Eigen::SelfAdjointEigenSolver<CMatrix> es(W.adjoint() * W);
      lambda = es.eigenvalues().cwiseMax(0.0);
      root = es.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
    }
    for (int j = 0; j < cfg.n_sig; ++j) {
      const int ell = k * cfg.n_sig + j;
      for (int s = 0; s < S; ++s) z(s) = rng.complex_normal(kNoisePsd);
      noise.noalias() = root * z;
      if (with_signal) noise.noalias() += W.adjoint() * (f * response_from_projections(ch, c, ell));
      numerator += noise.squaredNorm();
    }
    if (dof > 0) {
      for (int s = 0; s < S; ++s) residual += kNoisePsd * lambda(s) * rng.gamma(static_cast<double>(dof));
    }
  }
  const double energy = numerator + residual;
  if (!(energy > 0.0)) throw DegenerateObservation("trial produced zero energy");
  return std::clamp(numerator / energy, 0.0, 1.0);
}

double TrialKernel::run_explicit(double amplitude, Rng& rng) const {
  const PssConfig& cfg = scenario_.pss;
  const bool digital = is_digital(scenario_.frontend.kind);
  const int S = scenario_.frontend.rows(scenario_.ue.size());
  ChannelRealization ch = draw_channel(rng);

  std::vector<SlotObservation> obs;
  obs.reserve(cfg.n_slot);
  for (int k = 0; k < cfg.n_slot; ++k) {
    SlotDrive drive;
    drive.waveform = &waveforms_.front();
    drive.slot = k;
    drive.n_sig = cfg.n_sig;
    if (!digital) drive.rx_weights = random_rx_weights(scenario_.ue, S, rng, scenario_.sampling);
    drive.w_tx = tx_.weights(rng);
    const cplx f = amplitude * residual_factor(k);
    drive.amplitude = std::abs(f);
    drive.noise_psd = kNoisePsd;
    // The common phase of a slot does not change T; only the magnitude of
    // the residual factor is applied here.
    obs.push_back(observe_slot(scenario_.frontend, drive, ch, rng));
  }
  return compute_statistic(obs, waveforms_.front()).T;
}

std::vector<double> run_trials_serial(const TrialKernel& kernel, const TrialBatch& batch) {
  std::vector<double> out(batch.n_trials);
  for (long i = 0; i < batch.n_trials; ++i) {
    Rng rng({batch.seed, batch.stream, batch.point, static_cast<std::uint64_t>(i)});
    out[i] = kernel.run(batch.amplitude, rng);
  }
  return out;
}

std::vector<double> run_trials_parallel(const TrialKernel& kernel, const TrialBatch& batch,
                                        int threads) {
  std::vector<double> out(batch.n_trials);
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();
  std::exception_ptr failure;
#pragma omp parallel for num_threads(nthreads) schedule(static)
  for (long i = 0; i < batch.n_trials; ++i) {
    try {
      Rng rng({batch.seed, batch.stream, batch.point, static_cast<std::uint64_t>(i)});
      out[i] = kernel.run(batch.amplitude, rng);
    } catch (...) {
#pragma omp critical(cellsearch_trial_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace cellsearch

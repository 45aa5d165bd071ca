#include "cellsearch/glrt_detector.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

#include "cellsearch/errors.hpp"

namespace cellsearch {

namespace {

void check_bounds(double T) {
  assert(T >= -1e-12 && T <= 1.0 + 1e-12);
  (void)T;
}

int check_kinds(const std::vector<SlotObservation>& obs, bool want_digital) {
  if (obs.empty()) throw std::invalid_argument("no slot observations");
  const FrontendKind kind = obs.front().kind;
  const Eigen::Index rows = obs.front().data.rows();
  for (const auto& o : obs) {
    if (o.kind != kind) throw std::invalid_argument("mixed frontend kinds in one search");
    if (o.data.rows() != rows) throw DimensionError("slot observations disagree in row count");
  }
  if (is_digital(kind) != want_digital) {
    throw std::invalid_argument(want_digital ? "digital correlation on analog observations"
                                             : "analog correlation on digital observations");
  }
  return static_cast<int>(rows);
}

double require_threshold(std::optional<double> threshold) {
  if (!threshold) throw CalibrationError("no calibrated threshold for this observation kind");
  return *threshold;
}

}  // namespace

double doppler_hz(double speed_mps, double carrier_hz) {
  return speed_mps * carrier_hz / kSpeedOfLight;
}

HypothesisGrid make_grid(const PssConfig& cfg, const FrequencyUncertainty& fu) {
  HypothesisGrid g;
  g.n_dly = cfg.delay_hypotheses();
  g.n_pss = cfg.n_pss;
  g.delay_step_s = 1.0 / (2.0 * cfg.w_sig_hz);
  g.freq_step_hz = 1.0 / (4.0 * cfg.t_sig_s);
  g.max_offset_hz = cfg.carrier_hz * fu.lo_ppm * 1e-6 + doppler_hz(fu.speed_mps, cfg.carrier_hz);
  g.n_fo = std::max(1L, std::lround(2.0 * g.max_offset_hz / g.freq_step_hz));
  return g;
}

Eigenpair dominant_eigenpair(const CMatrix& gram, double tol, int max_iter) {
  if (gram.rows() != gram.cols() || gram.rows() == 0) {
    throw DimensionError("dominant_eigenpair needs a non-empty square matrix");
  }
  const Eigen::Index n = gram.rows();
  const double tr = gram.trace().real();
  Eigenpair out;
  if (!(tr > 0.0)) {
    out.vector = CVector::Unit(n, 0);
    return out;
  }
  // G^16 separates the top eigenvalue sixteen times faster per step.
  CMatrix p = gram / tr;
  for (int s = 0; s < 4; ++s) {
    p = (p * p).eval();
    p /= p.trace().real();
  }
  Eigen::Index start = 0;
  p.colwise().squaredNorm().maxCoeff(&start);
  CVector x = p.col(start).normalized();
  CVector y(n);
  int it = 0;
  for (; it < max_iter; ++it) {
    y.noalias() = p * x;
    y.normalize();
    const double diff = (y - x).norm();
    x.swap(y);
    if (diff < tol) break;
  }
  out.value = x.dot(gram * x).real();
  out.vector = std::move(x);
  out.iterations = it + 1;
  return out;
}

Eigenpair dominant_left_singular(const CMatrix& V) {
  if (V.rows() <= V.cols()) return dominant_eigenpair(V * V.adjoint());
  Eigenpair right = dominant_eigenpair(V.adjoint() * V);
  CVector u = V * right.vector;
  const double norm = u.norm();
  if (norm > 0.0) u /= norm;
  right.vector = std::move(u);
  return right;
}

double observation_energy(const std::vector<SlotObservation>& obs) {
  double e = 0.0;
  for (const auto& o : obs) e += o.data.squaredNorm();
  return e;
}

CMatrix correlate_digital(const std::vector<SlotObservation>& obs, const PssWaveform& wf) {
  const int rows = check_kinds(obs, true);
  const int n_sig = static_cast<int>(wf.coeffs.size());
  CMatrix V(rows, static_cast<Eigen::Index>(obs.size()) * n_sig);
  for (std::size_t k = 0; k < obs.size(); ++k) {
    for (int j = 0; j < n_sig; ++j) {
      const CVector& p = wf.coeffs[j];
      if (obs[k].data.cols() != p.size()) throw DimensionError("observation and waveform dimensions differ");
      V.col(static_cast<Eigen::Index>(k) * n_sig + j).noalias() = obs[k].data * p / p.norm();
    }
  }
  return V;
}

CVector correlate_analog(const std::vector<SlotObservation>& obs, const PssWaveform& wf) {
  const int streams = check_kinds(obs, false);
  const int n_sig = static_cast<int>(wf.coeffs.size());
  const Eigen::Index L = static_cast<Eigen::Index>(obs.size()) * n_sig;
  CVector v(L * streams);
  for (std::size_t k = 0; k < obs.size(); ++k) {
    for (int j = 0; j < n_sig; ++j) {
      const CVector& p = wf.coeffs[j];
      if (obs[k].data.cols() != p.size()) throw DimensionError("observation and waveform dimensions differ");
      const CVector c = obs[k].data * p / p.norm();
      for (int s = 0; s < streams; ++s) v(s * L + static_cast<Eigen::Index>(k) * n_sig + j) = c(s);
    }
  }
  return v;
}

DetectionStatistic statistic_digital(const CMatrix& V, double energy) {
  if (!(energy > 0.0)) throw DegenerateObservation("observation energy is zero");
  DetectionStatistic st;
  const Eigenpair top = dominant_left_singular(V);
  st.numerator = top.value;
  st.energy = energy;
  st.T = std::clamp(top.value / energy, 0.0, 1.0);
  st.V = V;
  st.u_hat = top.vector;
  check_bounds(st.T);
  return st;
}

DetectionStatistic statistic_analog(const CVector& v, double energy) {
  if (!(energy > 0.0)) throw DegenerateObservation("observation energy is zero");
  DetectionStatistic st;
  st.numerator = v.squaredNorm();
  st.energy = energy;
  st.T = std::clamp(st.numerator / energy, 0.0, 1.0);
  st.v = v;
  check_bounds(st.T);
  return st;
}

DetectionStatistic compute_statistic(const std::vector<SlotObservation>& obs,
                                     const PssWaveform& wf) {
  if (obs.empty()) throw std::invalid_argument("no slot observations");
  const double e = observation_energy(obs);
  DetectionStatistic st = is_digital(obs.front().kind) ? statistic_digital(correlate_digital(obs, wf), e)
                                                       : statistic_analog(correlate_analog(obs, wf), e);
  st.hypothesis.waveform = wf.id;
  return st;
}

double glrt_lambda_oracle(const std::vector<SlotObservation>& obs, const PssWaveform& wf) {
  if (obs.empty()) throw std::invalid_argument("no slot observations");
  const bool digital = is_digital(obs.front().kind);
  const Eigen::Index rows = obs.front().data.rows();
  const Eigen::Index n_dim = obs.front().data.cols();
  const int n_sig = static_cast<int>(wf.coeffs.size());
  const Eigen::Index L = static_cast<Eigen::Index>(obs.size()) * n_sig;

  // Matched-filter outputs, one column per sub-signal.
  CMatrix Y(rows, L);
  for (std::size_t k = 0; k < obs.size(); ++k) {
    for (int j = 0; j < n_sig; ++j) {
      const CVector p = wf.coeffs[j].normalized();
      for (Eigen::Index i = 0; i < rows; ++i) {
        cplx acc{0.0, 0.0};
        for (Eigen::Index n = 0; n < n_dim; ++n) acc += obs[k].data(i, n) * p(n);
        Y(i, static_cast<Eigen::Index>(k) * n_sig + j) = acc;
      }
    }
  }

  // Per-sub-signal gain estimates. Digital: rank-one fit alpha_l u with u the
  // top left singular vector. Analog: every row keeps its own gain.
  CMatrix G(rows, L);
  if (digital) {
    Eigen::JacobiSVD<CMatrix> svd(Y, Eigen::ComputeThinU);
    const CVector u = svd.matrixU().col(0);
    const Eigen::RowVectorXcd alpha = u.adjoint() * Y;
    G = u * alpha;
  } else {
    G = Y;
  }

  double energy = 0.0, residual = 0.0;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    CMatrix fit = CMatrix::Zero(rows, n_dim);
    for (int j = 0; j < n_sig; ++j) {
      const CVector p = wf.coeffs[j].normalized();
      fit.noalias() += G.col(static_cast<Eigen::Index>(k) * n_sig + j) * p.adjoint();
    }
    energy += obs[k].data.squaredNorm();
    residual += (obs[k].data - fit).squaredNorm();
  }

  const double dims = static_cast<double>(obs.size()) * rows * n_dim;
  auto max_loglik = [dims](double err) {
    const double nu = err / dims;  // ML noise level
    return -dims * std::log(kPi * nu) - err / nu;
  };
  return max_loglik(residual) - max_loglik(energy);
}

double lambda_from_statistic(double T, int n_slot, int rows, int n_dim) {
  return -static_cast<double>(n_slot) * rows * n_dim * std::log1p(-T);
}

SearchResult search_fast(const std::vector<SlotObservation>& obs, const PssWaveform& truth,
                         std::optional<double> threshold) {
  const double t = require_threshold(threshold);
  const DetectionStatistic st = compute_statistic(obs, truth);
  SearchResult r;
  r.T = st.T;
  r.best = st.hypothesis;
  r.evaluated = 1;
  r.exceedances = st.T >= t ? 1 : 0;
  r.detected = st.T >= t;
  return r;
}

SearchResult search_waveforms(const std::vector<SlotObservation>& obs,
                              const std::vector<PssWaveform>& waveforms,
                              std::optional<double> threshold) {
  const double t = require_threshold(threshold);
  SearchResult r;
  r.T = -1.0;
  for (const auto& wf : waveforms) {
    const DetectionStatistic st = compute_statistic(obs, wf);
    ++r.evaluated;
    if (st.T >= t) ++r.exceedances;
    if (st.T > r.T) {  // strict: earlier waveform wins ties
      r.T = st.T;
      r.best = st.hypothesis;
    }
  }
  r.detected = r.T >= t;
  return r;
}

}  // namespace cellsearch

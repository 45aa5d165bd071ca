#include "cellsearch/channel.hpp"

#include <cmath>
#include <string>

#include "cellsearch/errors.hpp"

namespace cellsearch {

namespace {

void check_size(const CVector& w, int expected, const char* what) {
  if (w.size() != expected) {
    throw DimensionError(std::string(what) + " has length " + std::to_string(w.size()) +
                         ", expected " + std::to_string(expected));
  }
}

std::vector<cplx> draw_gains(const ChannelDrawSpec& spec, double power, Rng& rng) {
  std::vector<cplx> g(spec.num_subsignals);
  switch (spec.fading) {
    case FadingModel::iid:
      for (auto& x : g) x = rng.complex_normal(power);
      break;
    case FadingModel::block_per_slot:
      for (int l = 0; l < spec.num_subsignals; ++l) {
        g[l] = l % spec.n_sig == 0 ? rng.complex_normal(power) : g[l - 1];
      }
      break;
    case FadingModel::constant: {
      const cplx x = rng.complex_normal(power);
      for (auto& y : g) y = x;
      break;
    }
  }
  return g;
}

void check_spec(const ChannelDrawSpec& spec) {
  if (spec.num_subsignals < 1 || spec.n_sig < 1) {
    throw ConfigError("channel draw needs at least one sub-signal");
  }
}

}  // namespace

Direction normalize_direction(Direction d) {
  double el = std::remainder(d.elevation, 2.0 * kPi);  // [-pi, pi]
  double az = d.azimuth;
  if (el > kPi / 2) {
    el = kPi - el;
    az += kPi;
  } else if (el < -kPi / 2) {
    el = -kPi - el;
    az += kPi;
  }
  az = std::remainder(az, 2.0 * kPi);
  if (az >= kPi) az -= 2.0 * kPi;
  return {az, el};
}

CMatrix ChannelRealization::matrix(int ell) const {
  CMatrix h = CMatrix::Zero(n_rx, n_tx);
  for (const auto& p : paths) h.noalias() += p.g.at(ell) * p.u * p.v.adjoint();
  return h;
}

CMatrix ChannelRealization::physical_matrix(int ell) const {
  return std::sqrt(static_cast<double>(n_rx) * n_tx) * matrix(ell);
}

void MultipathParams::validate() const {
  if (!(cluster_mean >= 0.0)) throw ConfigError("channel.cluster_mean must be non-negative");
  if (!(power_decay >= 0.0)) throw ConfigError("channel.power_decay must be non-negative");
  // Zero spread is allowed: it collapses each cluster onto its centre.
  if (!(spread_deg >= 0.0)) throw ConfigError("channel.spread_deg must be non-negative");
  if (subpaths < 1) throw ConfigError("channel.subpaths must be at least 1");
}

ChannelRealization draw_single_path(const ArrayGeometry& bs, const ArrayGeometry& ue,
                                    const ChannelDrawSpec& spec, Rng& rng) {
  bs.validate();
  ue.validate();
  check_spec(spec);
  ChannelRealization ch;
  ch.n_rx = ue.size();
  ch.n_tx = bs.size();
  ChannelPath p;
  p.rx_direction = random_direction(rng, spec.sampling);
  p.tx_direction = random_direction(rng, spec.sampling);
  p.u = steering_vector(ue, p.rx_direction);
  p.v = steering_vector(bs, p.tx_direction);
  p.g = draw_gains(spec, 1.0, rng);
  ch.paths.push_back(std::move(p));
  return ch;
}

ChannelRealization draw_multipath(const MultipathParams& params, const ArrayGeometry& bs,
                                  const ArrayGeometry& ue, const ChannelDrawSpec& spec,
                                  Rng& rng) {
  params.validate();
  bs.validate();
  ue.validate();
  check_spec(spec);

  const int clusters = 1 + rng.poisson(params.cluster_mean);
  std::vector<double> power(clusters);
  double total = 0.0;
  for (int c = 0; c < clusters; ++c) total += power[c] = std::exp(-params.power_decay * c);

  // Laplacian with rms s has scale s / sqrt(2).
  const double b = params.spread_deg * kPi / 180.0 / std::sqrt(2.0);
  auto offset = [&](double centre) { return b > 0.0 ? centre + rng.laplace(b) : centre; };

  ChannelRealization ch;
  ch.n_rx = ue.size();
  ch.n_tx = bs.size();
  ch.paths.reserve(static_cast<std::size_t>(clusters) * params.subpaths);
  for (int c = 0; c < clusters; ++c) {
    const Direction rx0 = random_direction(rng, spec.sampling);
    const Direction tx0 = random_direction(rng, spec.sampling);
    const double sub_power = power[c] / total / params.subpaths;
    for (int s = 0; s < params.subpaths; ++s) {
      ChannelPath p;
      p.gain_scale = sub_power;
      p.rx_direction = normalize_direction({offset(rx0.azimuth), offset(rx0.elevation)});
      p.tx_direction = normalize_direction({offset(tx0.azimuth), offset(tx0.elevation)});
      p.u = steering_vector(ue, p.rx_direction);
      p.v = steering_vector(bs, p.tx_direction);
      p.g = draw_gains(spec, sub_power, rng);
      ch.paths.push_back(std::move(p));
    }
  }
  return ch;
}

std::vector<cplx> tx_projections(const ChannelRealization& ch, const CVector& w_tx) {
  check_size(w_tx, ch.n_tx, "w_tx");
  std::vector<cplx> c(ch.paths.size());
  for (std::size_t p = 0; p < ch.paths.size(); ++p) c[p] = ch.paths[p].v.dot(w_tx);
  return c;
}

CVector response_from_projections(const ChannelRealization& ch, const std::vector<cplx>& c,
                                  int ell) {
  CVector r = CVector::Zero(ch.n_rx);
  for (std::size_t p = 0; p < ch.paths.size(); ++p) {
    r.noalias() += (ch.paths[p].g.at(ell) * c[p]) * ch.paths[p].u;
  }
  return r;
}

DigitalGain effective_gain_digital(const ChannelRealization& ch, const CVector& w_tx, int ell) {
  const auto c = tx_projections(ch, w_tx);
  DigitalGain out;
  if (ch.single_path()) out.alpha = ch.paths.front().g.at(ell) * c.front();
  out.response = response_from_projections(ch, c, ell);
  return out;
}

cplx effective_gain_analog(const ChannelRealization& ch, const CVector& w_tx,
                           const CVector& w_rx, int ell) {
  check_size(w_rx, ch.n_rx, "w_rx");
  return w_rx.dot(effective_gain_digital(ch, w_tx, ell).response);
}

}  // namespace cellsearch

#pragma once

#include <vector>

#include "cellsearch/antenna_array.hpp"
#include "cellsearch/rng.hpp"
#include "cellsearch/types.hpp"

namespace cellsearch {

// How the small-scale gains g_l evolve over the search.
enum class FadingModel { iid, block_per_slot, constant };

/// One propagation path (or multipath subpath).
struct ChannelPath {
  double gain_scale = 1.0;  // E|g_l|^2 for this path
  Direction tx_direction;
  Direction rx_direction;
  CVector u;  // unit-norm receive signature
  CVector v;  // unit-norm transmit signature
  std::vector<cplx> g;  // per sub-signal gain, length L
};

/// A channel drawn for one trial. H_l = sum_p g_{p,l} u_p v_p^H, normalized
/// so that E ||H_l||_F^2 = 1; the physical matrix carries the array gain
/// sqrt(N_rx N_tx) on top (see physical_matrix).
struct ChannelRealization {
  std::vector<ChannelPath> paths;
  int n_rx = 0;
  int n_tx = 0;

  bool single_path() const { return paths.size() == 1; }
  int num_subsignals() const { return paths.empty() ? 0 : static_cast<int>(paths.front().g.size()); }
  const CVector& u() const { return paths.front().u; }
  const CVector& v() const { return paths.front().v; }

  CMatrix matrix(int ell) const;
  CMatrix physical_matrix(int ell) const;  // E ||.||_F^2 = N_rx N_tx
};

struct MultipathParams {
  double cluster_mean = 1.8;      // clusters = 1 + Poisson(cluster_mean)
  double power_decay = 1.0;       // cluster c gets power ~ exp(-power_decay c)
  double spread_deg = 10.0;       // rms Laplacian spread, azimuth and elevation
  int subpaths = 20;

  void validate() const;  // throws ConfigError
};

struct ChannelDrawSpec {
  int num_subsignals = 200;
  int n_sig = 4;  // sub-signals per slot, used by block_per_slot fading
  FadingModel fading = FadingModel::iid;
  ElevationSampling sampling = ElevationSampling::sphere;
};

ChannelRealization draw_single_path(const ArrayGeometry& bs, const ArrayGeometry& ue,
                                    const ChannelDrawSpec& spec, Rng& rng);

ChannelRealization draw_multipath(const MultipathParams& params, const ArrayGeometry& bs,
                                  const ArrayGeometry& ue, const ChannelDrawSpec& spec, Rng& rng);

/// Receive-side vector seen by a fully digital array for sub-signal l:
/// H_l w_tx. For a single path, alpha = g_l v^H w_tx and response = alpha u.
struct DigitalGain {
  cplx alpha{0.0, 0.0};  // only meaningful for a single path
  CVector response;
};

DigitalGain effective_gain_digital(const ChannelRealization& ch, const CVector& w_tx, int ell);

/// Scalar seen through receive weights: w_rx^H H_l w_tx.
cplx effective_gain_analog(const ChannelRealization& ch, const CVector& w_tx,
                           const CVector& w_rx, int ell);

/// Per-slot precomputation: c_p = v_p^H w_tx for every path. With it,
/// H_l w_tx = sum_p g_{p,l} c_p u_p for all l in the slot.
std::vector<cplx> tx_projections(const ChannelRealization& ch, const CVector& w_tx);
CVector response_from_projections(const ChannelRealization& ch, const std::vector<cplx>& c,
                                  int ell);

// Wraps azimuth into [-pi, pi) and reflects elevation into [-pi/2, pi/2].
Direction normalize_direction(Direction d);

}  // namespace cellsearch

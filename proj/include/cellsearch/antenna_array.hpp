#pragma once

#include <Eigen/Dense>

#include "cellsearch/rng.hpp"
#include "cellsearch/types.hpp"

namespace cellsearch {

/// Uniform planar array of isotropic elements on a rows x cols grid.
struct ArrayGeometry {
  int rows = 4;
  int cols = 4;
  double spacing_wl = 0.5;  // element spacing in wavelengths

  int size() const { return rows * cols; }
  void validate() const;  // throws ConfigError

  friend bool operator==(const ArrayGeometry&, const ArrayGeometry&) = default;
};

struct Direction {
  double azimuth = 0.0;    // [-pi, pi)
  double elevation = 0.0;  // [-pi/2, pi/2]
};

// How random elevations are drawn. `sphere` makes directions uniform on the
// unit sphere (sin(el) uniform); `angle` draws el itself uniformly.
enum class ElevationSampling { sphere, angle };

/// Unit-norm array response. Element (m, n), stored at index m*cols + n, is
/// exp(j 2 pi d (m sin(el) + n cos(el) sin(az))) / sqrt(N).
CVector steering_vector(const ArrayGeometry& array, const Direction& dir);

Direction random_direction(Rng& rng, ElevationSampling sampling = ElevationSampling::sphere);

/// Largest single-path beamforming gain: the element count.
double max_bf_gain(const ArrayGeometry& array);

/// Power-pattern overlap matrix S of the element grid,
/// S_ij = sin(k d_ij) / (k d_ij), with d_ij the distance between elements
/// i and j. For isotropic elements the power radiated by weights w is
/// w^H S w, and the sphere average of N |a(d)^H w|^2 equals the same value.
Eigen::MatrixXd radiation_overlap(const ArrayGeometry& array);

double radiated_power(const Eigen::MatrixXd& overlap, const CVector& weights);

}  // namespace cellsearch

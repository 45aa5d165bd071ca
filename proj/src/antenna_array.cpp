#include "cellsearch/antenna_array.hpp"

#include <cmath>
#include <string>

#include "cellsearch/errors.hpp"

namespace cellsearch {

void ArrayGeometry::validate() const {
  if (rows < 1 || cols < 1) {
    throw ConfigError("array dimensions must be positive, got " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
  if (!(spacing_wl > 0.0)) {
    throw ConfigError("spacing_wl must be positive");
  }
}

CVector steering_vector(const ArrayGeometry& array, const Direction& dir) {
  const double u_row = std::sin(dir.elevation);
  const double u_col = std::cos(dir.elevation) * std::sin(dir.azimuth);
  const double k = 2.0 * kPi * array.spacing_wl;
  const double scale = 1.0 / std::sqrt(static_cast<double>(array.size()));
  // The phase is separable in (m, n).
  CVector col_phase(array.cols);
  for (int n = 0; n < array.cols; ++n) col_phase(n) = std::polar(scale, k * n * u_col);
  CVector a(array.size());
  for (int m = 0; m < array.rows; ++m) {
    a.segment(m * array.cols, array.cols) = std::polar(1.0, k * m * u_row) * col_phase;
  }
  return a;
}

Direction random_direction(Rng& rng, ElevationSampling sampling) {
  Direction d;
  d.azimuth = rng.uniform(-kPi, kPi);
  if (sampling == ElevationSampling::sphere) {
    d.elevation = std::asin(rng.uniform(-1.0, 1.0));
  } else {
    d.elevation = rng.uniform(-0.5 * kPi, 0.5 * kPi);
  }
  return d;
}

double max_bf_gain(const ArrayGeometry& array) { return static_cast<double>(array.size()); }

Eigen::MatrixXd radiation_overlap(const ArrayGeometry& array) {
  const int n = array.size();
  Eigen::MatrixXd s(n, n);
  for (int i = 0; i < n; ++i) {
    const int mi = i / array.cols;
    const int ni = i % array.cols;
    for (int j = 0; j < n; ++j) {
      const int dm = mi - j / array.cols;
      const int dn = ni - j % array.cols;
      const double x = 2.0 * kPi * array.spacing_wl * std::sqrt(double(dm * dm + dn * dn));
      s(i, j) = x == 0.0 ? 1.0 : std::sin(x) / x;
    }
  }
  return s;
}

double radiated_power(const Eigen::MatrixXd& overlap, const CVector& weights) {
  if (overlap.rows() != weights.size()) {
    throw DimensionError("radiated_power: weight length " + std::to_string(weights.size()) +
                         " does not match array size " + std::to_string(overlap.rows()));
  }
  // S is real symmetric, so the cross terms of w^H S w cancel.
  const Eigen::VectorXd re = weights.real();
  const Eigen::VectorXd im = weights.imag();
  return re.dot(overlap * re) + im.dot(overlap * im);
}

}  // namespace cellsearch

#pragma once

#include <complex>

#include <Eigen/Dense>

namespace cellsearch {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;

}  // namespace cellsearch

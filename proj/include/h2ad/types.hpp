#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>

namespace h2ad {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Wraps a phase into (-pi, pi].
double wrap_phase(double radians);

}  // namespace h2ad

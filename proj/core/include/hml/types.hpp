#pragma once

#include <complex>

#include <Eigen/Dense>

namespace hml {

using cd = std::complex<double>;

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

using CVec4 = Eigen::Matrix<cd, 4, 1>;
using CVec6 = Eigen::Matrix<cd, 6, 1>;
using CMat3 = Eigen::Matrix3cd;
using CMat6 = Eigen::Matrix<cd, 6, 6>;

/// Spacetime point x~ = (t, x1, x2, x3); index 0 is time.
using SpacetimePoint = Vec4;

/// Field component order shared by every array and file: E1 E2 E3 H1 H2 H3.
inline constexpr int kComponents = 6;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace hml

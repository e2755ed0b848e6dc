#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace kfp {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kZeta2 = std::numbers::pi * std::numbers::pi / 6.0;

/// A point on the complexified parameter manifold. Coordinates are ordered
/// (d, poles..., roots...); the d slot is absent for models without a
/// fractional part.
struct ParamPoint {
  CVector coords;

  ParamPoint() = default;
  explicit ParamPoint(CVector c) : coords(std::move(c)) {}

  Eigen::Index size() const { return coords.size(); }
  Complex operator[](Eigen::Index i) const { return coords[i]; }
  Complex& operator[](Eigen::Index i) { return coords[i]; }
};

}  // namespace kfp

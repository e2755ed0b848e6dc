#pragma once

#include <functional>

#include "kfp/types.hpp"

namespace kfp::wirtinger {

using RealFunction = std::function<double(const ParamPoint&)>;
using ComplexFunction = std::function<Complex(const ParamPoint&)>;
using MatrixFunction = std::function<CMatrix(const ParamPoint&)>;

/// Per-coordinate step: rel_step * max(1, |xi_i|).
double step_for(const ParamPoint& point, Eigen::Index i, double rel_step);

/// d_i f = (d_x - i d_y) f / 2 by central differences.
CVector gradient(const RealFunction& f, const ParamPoint& point, double rel_step = 1e-4);

/// Mixed Hessian H(i, j) = d_i d_jbar f. Diagonal entries use the 3-point
/// second difference, off-diagonal entries the 4-point bilinear stencil on
/// each pair of real directions.
CMatrix mixed_hessian(const RealFunction& f, const ParamPoint& point, double rel_step = 1e-4);

/// Richardson-extrapolated mixed Hessian from steps h and h/2.
CMatrix mixed_hessian_richardson(const RealFunction& f, const ParamPoint& point,
                                 double rel_step = 2e-4);

/// Wirtinger partials of a matrix-valued function along coordinate i:
/// holomorphic (d_i) when `conjugate` is false, antiholomorphic otherwise.
CMatrix matrix_partial(const MatrixFunction& f, const ParamPoint& point, Eigen::Index i,
                       bool conjugate, double rel_step = 1e-5);

/// Complex derivative of a holomorphic function along coordinate i.
Complex holomorphic_derivative(const ComplexFunction& f, const ParamPoint& point, Eigen::Index i,
                               double rel_step = 1e-6);

}  // namespace kfp::wirtinger

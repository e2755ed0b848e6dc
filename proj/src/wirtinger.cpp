#include "kfp/wirtinger.hpp"

#include <algorithm>
#include <cmath>

namespace kfp::wirtinger {

namespace {

const Complex kI(0.0, 1.0);

ParamPoint shifted(const ParamPoint& point, Eigen::Index i, Complex delta) {
  ParamPoint out = point;
  out[i] += delta;
  return out;
}

ParamPoint shifted(const ParamPoint& point, Eigen::Index i, Complex di, Eigen::Index j,
                   Complex dj) {
  ParamPoint out = point;
  out[i] += di;
  out[j] += dj;
  return out;
}

// Second partial along the real directions u (of coordinate i) and v (of
// coordinate j), each either 1 (real part) or i (imaginary part).
double cross_partial(const RealFunction& f, const ParamPoint& point, Eigen::Index i, Complex u,
                     double hi, Eigen::Index j, Complex v, double hj) {
  const double fpp = f(shifted(point, i, u * hi, j, v * hj));
  const double fpm = f(shifted(point, i, u * hi, j, -v * hj));
  const double fmp = f(shifted(point, i, -u * hi, j, v * hj));
  const double fmm = f(shifted(point, i, -u * hi, j, -v * hj));
  return (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
}

CMatrix mixed_hessian_with_scale(const RealFunction& f, const ParamPoint& point, double rel_step) {
  const Eigen::Index n = point.size();
  CMatrix h = CMatrix::Zero(n, n);
  const double f0 = f(point);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = step_for(point, i, rel_step);
    const double fxx = (f(shifted(point, i, hi)) - 2.0 * f0 + f(shifted(point, i, -hi))) / (hi * hi);
    const double fyy =
        (f(shifted(point, i, kI * hi)) - 2.0 * f0 + f(shifted(point, i, -kI * hi))) / (hi * hi);
    h(i, i) = 0.25 * (fxx + fyy);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double hj = step_for(point, j, rel_step);
      const double xx = cross_partial(f, point, i, 1.0, hi, j, 1.0, hj);
      const double yy = cross_partial(f, point, i, kI, hi, j, kI, hj);
      const double xy = cross_partial(f, point, i, 1.0, hi, j, kI, hj);
      const double yx = cross_partial(f, point, i, kI, hi, j, 1.0, hj);
      h(i, j) = 0.25 * Complex(xx + yy, xy - yx);
      h(j, i) = std::conj(h(i, j));
    }
  }
  return h;
}

}  // namespace

double step_for(const ParamPoint& point, Eigen::Index i, double rel_step) {
  return rel_step * std::max(1.0, std::abs(point[i]));
}

CVector gradient(const RealFunction& f, const ParamPoint& point, double rel_step) {
  const Eigen::Index n = point.size();
  CVector g(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = step_for(point, i, rel_step);
    const double fx = (f(shifted(point, i, h)) - f(shifted(point, i, -h))) / (2.0 * h);
    const double fy = (f(shifted(point, i, kI * h)) - f(shifted(point, i, -kI * h))) / (2.0 * h);
    g[i] = 0.5 * Complex(fx, -fy);
  }
  return g;
}

CMatrix mixed_hessian(const RealFunction& f, const ParamPoint& point, double rel_step) {
  return mixed_hessian_with_scale(f, point, rel_step);
}

CMatrix mixed_hessian_richardson(const RealFunction& f, const ParamPoint& point,
                                 double rel_step) {
  const CMatrix coarse = mixed_hessian_with_scale(f, point, rel_step);
  const CMatrix fine = mixed_hessian_with_scale(f, point, 0.5 * rel_step);
  return (4.0 * fine - coarse) / 3.0;
}

CMatrix matrix_partial(const MatrixFunction& f, const ParamPoint& point, Eigen::Index i,
                       bool conjugate, double rel_step) {
  const double h = step_for(point, i, rel_step);
  const CMatrix fx = (f(shifted(point, i, h)) - f(shifted(point, i, -h))) / (2.0 * h);
  const CMatrix fy = (f(shifted(point, i, kI * h)) - f(shifted(point, i, -kI * h))) / (2.0 * h);
  return conjugate ? CMatrix(0.5 * (fx + kI * fy)) : CMatrix(0.5 * (fx - kI * fy));
}

Complex holomorphic_derivative(const ComplexFunction& f, const ParamPoint& point, Eigen::Index i,
                               double rel_step) {
  const double h = step_for(point, i, rel_step);
  return (f(shifted(point, i, h)) - f(shifted(point, i, -h))) / (2.0 * h);
}

}  // namespace kfp::wirtinger

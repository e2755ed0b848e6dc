#include "kfp/field.hpp"

#include <cmath>

#include "kfp/errors.hpp"
#include "kfp/wirtinger.hpp"

namespace kfp {

FieldJet ScalarField::jet(const FilterModel& at) const {
  if (jet_) return jet_(at);
  return fd_jet(at);
}

FieldJet ScalarField::fd_jet(const FilterModel& at, double rel_step) const {
  const auto f = [&](const ParamPoint& p) { return value_(at.at(p)); };
  const ParamPoint center = at.point();
  FieldJet out;
  out.value = value_(at);
  out.grad = wirtinger::gradient(f, center, rel_step);
  out.hess = wirtinger::mixed_hessian(f, center, rel_step);
  return out;
}

FieldJet compose(const FieldJet& inner, double outer, double outer_d1, double outer_d2) {
  FieldJet out;
  out.value = outer;
  out.grad = outer_d1 * inner.grad;
  out.hess = outer_d1 * inner.hess + outer_d2 * (inner.grad * inner.grad.adjoint());
  return out;
}

ScalarField constant_field(double c) {
  return ScalarField(
      "constant", [c](const FilterModel&) { return c; },
      [c](const FilterModel& at) {
        const auto n = static_cast<Eigen::Index>(at.dimension());
        return FieldJet{c, CVector::Zero(n), CMatrix::Zero(n, n)};
      });
}

ScalarField sqrt_field(const ScalarField& field) {
  auto value = [field](const FilterModel& at) {
    const double v = field.value(at);
    if (!(v > 0.0)) throw DomainError("square root of a non-positive prior function");
    return std::sqrt(v);
  };
  ScalarField::JetFn jet;
  if (field.has_analytic_jet()) {
    jet = [field](const FilterModel& at) {
      const FieldJet inner = field.jet(at);
      if (!(inner.value > 0.0)) throw DomainError("square root of a non-positive prior function");
      const double s = std::sqrt(inner.value);
      return compose(inner, s, 0.5 / s, -0.25 / (s * inner.value));
    };
  }
  return ScalarField("sqrt(" + field.id() + ")", std::move(value), std::move(jet));
}

}  // namespace kfp

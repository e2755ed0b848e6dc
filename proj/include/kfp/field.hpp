#pragma once

#include <functional>
#include <string>

#include "kfp/filter_model.hpp"
#include "kfp/types.hpp"

namespace kfp {

/// Value and Wirtinger derivatives of a real scalar field at one point:
/// grad[i] = d_i f, hess(i, j) = d_i d_jbar f. For a real field
/// d_ibar f = conj(d_i f), so these determine everything the Laplacian needs.
struct FieldJet {
  double value = 0.0;
  CVector grad;
  CMatrix hess;
};

/// A real-valued function on the parameter manifold. Fields evaluate at a
/// FilterModel, which carries both the structure and the coordinates.
/// Built-in fields register analytic jets; others fall back to finite
/// differences of the value.
class ScalarField {
 public:
  using ValueFn = std::function<double(const FilterModel&)>;
  using JetFn = std::function<FieldJet(const FilterModel&)>;

  ScalarField(std::string id, ValueFn value, JetFn jet = {})
      : id_(std::move(id)), value_(std::move(value)), jet_(std::move(jet)) {}

  const std::string& id() const { return id_; }
  bool has_analytic_jet() const { return static_cast<bool>(jet_); }

  double value(const FilterModel& at) const { return value_(at); }
  FieldJet jet(const FilterModel& at) const;
  /// Finite-difference jet regardless of registration (cross-check oracle).
  FieldJet fd_jet(const FilterModel& at, double rel_step = 1e-4) const;

 private:
  std::string id_;
  ValueFn value_;
  JetFn jet_;
};

/// Jet of F(f) given F, F', F'' evaluated at f's value:
///   d_i F(f) = F' d_i f,   d_i d_jbar F(f) = F' d_i d_jbar f + F'' d_i f conj(d_j f).
FieldJet compose(const FieldJet& inner, double outer, double outer_d1, double outer_d2);

ScalarField constant_field(double c);
ScalarField sqrt_field(const ScalarField& field);

}  // namespace kfp

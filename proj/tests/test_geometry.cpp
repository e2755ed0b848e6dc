#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "kfp/errors.hpp"
#include "kfp/geometry.hpp"
#include "kfp/sampling.hpp"
#include "kfp/wirtinger.hpp"

using namespace kfp;

namespace {

struct Structure {
  const char* name;
  FilterModel model;
};

std::vector<Structure> structures() {
  return {
      {"AR(1)", FilterModel::arma({0.3}, {})},
      {"AR(2)", FilterModel::arma({0.3, -0.2}, {})},
      {"ARMA(1,1)", FilterModel::arma({0.3}, {-0.2})},
      {"ARFIMA(1,d,1)", FilterModel::arfima(0.2, {0.3}, {-0.2})},
      {"ARFIMA(2,d,1)", FilterModel::arfima(0.2, {0.3, -0.4}, {0.1})},
      {"ARFIMA(2,d,2)", FilterModel::arfima(0.2, {0.3, -0.4}, {0.1, 0.6})},
  };
}

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

/// d_i g_{j kbar} by central differences of the closed-form metric along xi_i.
CMatrix fd_metric_derivative(const FilterModel& model, std::size_t i) {
  return wirtinger::matrix_partial(
      [&](const ParamPoint& p) { return metric_closed_form_matrix(model.at(p)); }, model.point(),
      static_cast<Eigen::Index>(i), false, 1e-6);
}

}  // namespace

TEST_CASE("make_hermitian_metric validates its input") {
  CMatrix ok(2, 2);
  ok << 2.0, Complex(0.5, 0.5), Complex(0.5, -0.5), 1.0;
  const auto m = make_hermitian_metric(ok);
  CHECK(std::abs(m.det - (2.0 - 0.5)) < 1e-14);
  CHECK(max_abs(m.g_inv * m.g - CMatrix::Identity(2, 2)) < 1e-14);

  CMatrix skew = ok;
  skew(0, 1) = Complex(0.5, 0.4);
  CHECK_THROWS_AS(make_hermitian_metric(skew), GeometryError);
  CMatrix indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(make_hermitian_metric(indefinite), GeometryError);
}

TEST_CASE("metric examples") {
  CHECK(std::abs(metric_closed_form(FilterModel::arma({0.0}, {})).g(0, 0) - 1.0) < 1e-15);
  CHECK(std::abs(metric_series(FilterModel::arma({0.0}, {})).g(0, 0) - 1.0) < 1e-15);
  CHECK(std::abs(metric_closed_form(FilterModel::arma({0.5}, {})).g(0, 0) - 4.0 / 3.0) < 1e-15);

  const auto fi = FilterModel::arfima(0.3, {0.5}, {});
  const auto g = metric_closed_form(fi);
  CHECK(std::abs(g.g(0, 0) - kZeta2) < 1e-15);
  CHECK(std::abs(std::abs(g.g(0, 1)) - std::abs(2.0 * std::log(0.5))) < 1e-14);
  const double det = kZeta2 * 4.0 / 3.0 - 4.0 * std::log(0.5) * std::log(0.5);
  CHECK(std::abs(g.det - det) < 1e-13);
}

TEST_CASE("series metric equals the closed form over sampled points") {
  std::uint64_t seed = 100;
  for (const auto& s : structures()) {
    CAPTURE(s.name);
    const auto points = sample_points(s.model, SamplingDomain{}, 40, seed++);
    for (const auto& pt : points) {
      const FilterModel at = s.model.at(pt);
      const CMatrix series = metric_series(at).g;
      const CMatrix closed = metric_closed_form(at).g;
      CHECK(max_abs(series - closed) <= 1e-8);
      if (at.has_fi()) CHECK(std::abs(closed(0, 0) - kZeta2) < 1e-9);
    }
  }
}

TEST_CASE("potential: series, closed form and bound") {
  std::uint64_t seed = 7;
  for (const auto& s : structures()) {
    CAPTURE(s.name);
    for (const auto& pt : sample_points(s.model, SamplingDomain{}, 30, seed++)) {
      const FilterModel at = s.model.at(pt);
      const double series = kahler_potential(at);
      CHECK(std::abs(series - kahler_potential_closed_form(at)) < 1e-9);
      CHECK(series >= 0.0);
      CHECK(series <= kahler_potential_bound(at));
    }
  }
  CHECK(kahler_potential(FilterModel::arma({0.0}, {})) == 0.0);
  const auto fi = FilterModel::arfima(0.3, {}, {});
  CHECK(std::abs(kahler_potential(fi) - 0.09 * kZeta2) < 1e-14);
  CHECK(std::abs(kahler_potential_closed_form(fi) - 0.09 * kZeta2) < 1e-14);
}

TEST_CASE("metric is the mixed Wirtinger Hessian of the potential") {
  std::uint64_t seed = 31;
  for (const auto& s : structures()) {
    CAPTURE(s.name);
    for (const auto& pt : sample_points(s.model, SamplingDomain{}, 10, seed++)) {
      const FilterModel at = s.model.at(pt);
      const CMatrix h = wirtinger::mixed_hessian(
          [&](const ParamPoint& p) { return kahler_potential_closed_form(s.model.at(p)); }, pt, 1e-4);
      CHECK(max_abs(h - metric_closed_form(at).g) < 1e-5);
    }
  }
}

TEST_CASE("Laplace-Beltrami of the potential is 2n") {
  std::uint64_t seed = 50;
  for (const auto& s : structures()) {
    CAPTURE(s.name);
    for (const auto& pt : sample_points(s.model, SamplingDomain{}, 20, seed++)) {
      const FilterModel at = s.model.at(pt);
      const auto metric = metric_closed_form(at);
      FieldJet jet;
      jet.value = kahler_potential(at);
      jet.grad = CVector::Zero(static_cast<Eigen::Index>(at.dimension()));
      jet.hess = metric_series(at).g;
      CHECK(std::abs(laplace_beltrami(metric, jet) - 2.0 * static_cast<double>(at.dimension())) < 1e-6);
    }
  }
}

TEST_CASE("Laplace-Beltrami on simple fields") {
  const auto model = FilterModel::arfima(0.2, {Complex(0.3, 0.2)}, {Complex(-0.4, 0.1)});
  const auto metric = metric_closed_form(model);
  CHECK(laplace_beltrami(metric, constant_field(3.0), model) == 0.0);

  const std::vector<double> b{0.5, 2.0, 1.5};
  const ScalarField weighted("weighted", [b](const FilterModel& at) {
    double s = 0.0;
    const auto pt = at.point();
    for (Eigen::Index i = 0; i < pt.size(); ++i) s += b[static_cast<std::size_t>(i)] * std::norm(pt[i]);
    return s;
  });
  double expected = 0.0;
  for (Eigen::Index i = 0; i < 3; ++i) expected += 2.0 * b[static_cast<std::size_t>(i)] * metric.g_inv(i, i).real();
  CHECK(expected > 0.0);
  CHECK(std::abs(laplace_beltrami(metric, weighted, model) - expected) < 1e-6);

  FieldJet bad;
  bad.value = 0.0;
  bad.grad = CVector::Zero(3);
  bad.hess = CMatrix::Identity(3, 3) * Complex(0.0, 1.0);
  CHECK_THROWS_AS(laplace_beltrami(metric, bad), ConsistencyError);
}

TEST_CASE("connection") {
  CHECK(std::abs(connection(FilterModel::arma({0.0}, {}), ParamPoint{CVector::Zero(1)})(0, 0, 0)) == 0.0);
  const auto ar1 = FilterModel::arma({0.5}, {});
  CHECK(std::abs(connection(ar1, ar1.point())(0, 0, 0) - 0.5 / (0.75 * 0.75)) < 1e-14);

  std::uint64_t seed = 70;
  for (const auto& s : structures()) {
    CAPTURE(s.name);
    for (const auto& pt : sample_points(s.model, SamplingDomain{}, 6, seed++)) {
      const FilterModel at = s.model.at(pt);
      const auto gamma = connection(at, pt);
      const std::size_t n = at.dimension();
      for (std::size_t i = 0; i < n; ++i) {
        const CMatrix fd = fd_metric_derivative(at, i);
        for (std::size_t j = 0; j < n; ++j) {
          for (std::size_t k = 0; k < n; ++k) {
            CHECK(std::abs(gamma(i, j, k) - fd(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k))) < 1e-7);
            CHECK(std::abs(gamma(i, j, k) - gamma(j, i, k)) < 1e-8);
            if (at.has_fi() && (i == 0 || j == 0)) CHECK(gamma(i, j, k) == Complex(0.0));
          }
        }
      }
    }
  }
}

TEST_CASE("Ricci tensor") {
  // AR(1): log det g = -log(1 - |x|^2), so R = -1 / (1 - |x|^2)^2.
  const auto ar1 = FilterModel::arma({0.5}, {});
  const auto bilinear = ricci(ar1, ar1.point());
  RicciOptions rich;
  rich.stencil = RicciStencil::richardson;
  const auto richardson = ricci(ar1, ar1.point(), rich);
  CHECK(std::abs(bilinear.r(0, 0) - richardson.r(0, 0)) < 1e-5);
  CHECK(std::abs(bilinear.r(0, 0) - (-1.0 / (0.75 * 0.75))) < 1e-5);
  CHECK_FALSE(bilinear.precision_warning);

  const auto near_cancel = FilterModel::arma({0.9}, {0.85});
  RicciOptions strict;
  strict.condition_warning = 0.5 * metric_closed_form(near_cancel).condition_estimate;
  CHECK(ricci(near_cancel, near_cancel.point(), strict).precision_warning);
  strict.condition_warning *= 4.0;
  CHECK_FALSE(ricci(near_cancel, near_cancel.point(), strict).precision_warning);

  std::uint64_t seed = 90;
  for (const auto& s : structures()) {
    CAPTURE(s.name);
    for (const auto& pt : sample_points(s.model, SamplingDomain{}, 5, seed++)) {
      const FilterModel at = s.model.at(pt);
      const CMatrix r = ricci(at, pt).r;
      CHECK(max_abs(r - r.adjoint()) < 1e-5);
      if (!at.has_fi()) continue;
      for (Eigen::Index j = 0; j < r.cols(); ++j) {
        CHECK(std::abs(r(0, j)) < 1e-5);
        CHECK(std::abs(r(j, 0)) < 1e-5);
      }
      // Full Ricci = ARMA Ricci + mixing correction on the ARMA block.
      const auto arma = FilterModel::arma({at.poles().begin(), at.poles().end()},
                                          {at.roots().begin(), at.roots().end()});
      const CMatrix r_arma = ricci(arma, arma.point()).r;
      const CMatrix mixing = ricci_mixing_correction(at, pt);
      const Eigen::Index m = r.rows() - 1;
      CHECK(max_abs(r.bottomRightCorner(m, m) - r_arma - mixing.bottomRightCorner(m, m)) < 1e-4);
    }
  }
  CHECK_THROWS_AS(ricci_mixing_correction(ar1, ar1.point()), DomainError);
}

TEST_CASE("d = 0 block restriction equals the ARMA metric") {
  const std::vector<Complex> poles{Complex(0.3, 0.4), Complex(-0.6, 0.0)};
  const std::vector<Complex> roots{Complex(0.1, -0.5)};
  const auto arma = FilterModel::arma(poles, roots);
  for (const double d : {0.0, 0.3, -0.2}) {
    const auto arfima = FilterModel::arfima(d, poles, roots);
    const CMatrix full = metric_closed_form_matrix(arfima);
    CHECK(full.bottomRightCorner(3, 3) == metric_closed_form_matrix(arma));
  }
}

TEST_CASE("Kahler certificate") {
  const auto arfima = FilterModel::arfima(0.3, {0.2}, {-0.4});
  const auto cert = check_kahler(arfima, 30, 5);
  CHECK(cert.pass);
  CHECK(cert.sampled_points == 30);
  CHECK(cert.hermitian_residual <= 1e-8);
  CHECK(cert.closedness_residual <= 1e-6);

  const auto ar2 = FilterModel::arma({0.2, -0.5}, {});
  CHECK(check_kahler(ar2, 30, 6).closedness_residual <= 1e-6);

  const auto again = check_kahler(arfima, 30, 5);
  CHECK(again.hermitian_residual == cert.hermitian_residual);
  CHECK(again.closedness_residual == cert.closedness_residual);

  // Negative controls: a metric that is not closed, and a nonzero
  // holomorphic block.
  const auto ar = FilterModel::arma({0.1, 0.2}, {});
  const auto points = sample_points(ar, SamplingDomain{}, 10, 1);
  KahlerProbe not_closed;
  not_closed.hermitian_block = [](const ParamPoint& p) {
    CMatrix g = CMatrix::Identity(2, 2);
    g(0, 0) = 1.0 + std::norm(p[1]);
    return g;
  };
  const auto fail = certify_kahler(not_closed, points);
  CHECK_FALSE(fail.pass);
  CHECK(fail.closedness_residual > 1e-3);

  KahlerProbe not_hermitian;
  not_hermitian.hermitian_block = [](const ParamPoint&) { return CMatrix::Identity(2, 2); };
  not_hermitian.holomorphic_block = [](const ParamPoint& p) { return CMatrix::Constant(2, 2, p[0]); };
  CHECK_FALSE(certify_kahler(not_hermitian, points).pass);
}

TEST_CASE("holomorphic metric block vanishes") {
  const auto model = FilterModel::arfima(0.25, {Complex(0.5, 0.3)}, {Complex(-0.2, 0.4)});
  CHECK(max_abs(holomorphic_metric_block(model, model.point())) < 1e-8);
}

TEST_CASE("sampling is deterministic and respects the domain") {
  const auto model = FilterModel::arfima(0.1, {0.1, 0.2}, {0.3});
  const SamplingDomain domain;
  const auto a = sample_points(model, domain, 200, 42);
  const auto b = sample_points(model, domain, 200, 42);
  REQUIRE(a.size() == 200);
  for (std::size_t s = 0; s < a.size(); ++s) {
    CHECK(a[s].coords == b[s].coords);
    const auto at = model.at(a[s]);
    CHECK(std::abs(at.d()) <= domain.d_max);
    CHECK(at.d().imag() == 0.0);
    for (const Complex z : at.poles()) CHECK(std::abs(z) <= domain.pole_radius);
    for (const Complex z : at.roots()) CHECK(std::abs(z) <= domain.pole_radius);
    for (const Complex l : at.poles()) {
      for (const Complex m : at.roots()) {
        CHECK(std::abs(1.0 - l * std::conj(m)) >= domain.min_one_minus_product);
        CHECK(std::abs(l - m) >= domain.min_separation);
      }
    }
  }
  CHECK(sample_points(model, domain, 200, 43)[0].coords != a[0].coords);
}

TEST_CASE("parallel reductions do not depend on the worker count") {
  const auto model = FilterModel::arfima(0.3, {0.2}, {-0.4});
  setenv("KFP_THREADS", "1", 1);
  const auto one = check_kahler(model, 24, 9);
  setenv("KFP_THREADS", "4", 1);
  const auto four = check_kahler(model, 24, 9);
  unsetenv("KFP_THREADS");
  CHECK(one.hermitian_residual == four.hermitian_residual);
  CHECK(one.closedness_residual == four.closedness_residual);
}

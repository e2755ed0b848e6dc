#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "kfp/errors.hpp"
#include "kfp/priors.hpp"
#include "kfp/wirtinger.hpp"

using namespace kfp;

namespace {

std::vector<FilterModel> certificate_structures() {
  return {FilterModel::arma({0.3}, {}), FilterModel::arma({0.3, -0.2}, {}), FilterModel::arma({0.3}, {-0.2}),
          FilterModel::arfima(0.2, {0.3}, {-0.2})};
}

KappaAnsatz fixed_kappa(KappaKind kind, double u_star, std::vector<double> weights = {}) {
  KappaAnsatz k;
  k.kind = kind;
  k.u_star = u_star;
  k.weights = std::move(weights);
  return k;
}

/// Two rounds of Richardson extrapolation from base step h, with the size
/// of the last correction as an error estimate.
std::pair<CMatrix, double> sixth_order_hessian(const wirtinger::RealFunction& f, const ParamPoint& pt,
                                               double h) {
  const CMatrix h1 = wirtinger::mixed_hessian(f, pt, h);
  const CMatrix h2 = wirtinger::mixed_hessian(f, pt, h / 2);
  const CMatrix h3 = wirtinger::mixed_hessian(f, pt, h / 4);
  const CMatrix r1 = (4.0 * h2 - h1) / 3.0;
  const CMatrix r2 = (4.0 * h3 - h2) / 3.0;
  const CMatrix best = (16.0 * r2 - r1) / 15.0;
  return {best, (best - r2).cwiseAbs().maxCoeff()};
}

/// Finite-difference Hessian at the base step with the smallest estimated
/// error: large psi values favour large steps, steep Psi near tau = 0 small.
CMatrix oracle_hessian(const wirtinger::RealFunction& f, const ParamPoint& pt) {
  std::pair<CMatrix, double> best = sixth_order_hessian(f, pt, 1.6e-2);
  for (const double h : {4e-3, 1e-3}) {
    auto candidate = sixth_order_hessian(f, pt, h);
    if (candidate.second < best.second) best = std::move(candidate);
  }
  return best.first;
}

}  // namespace

TEST_CASE("kappa examples") {
  const auto origin = FilterModel::arma({0.0}, {});
  const auto k1 = kappa_value_and_derivatives(fixed_kappa(KappaKind::potential, 10.0), origin, origin.point());
  CHECK(k1.value == 0.0);
  CHECK(std::abs(k1.grad[0]) == 0.0);
  CHECK(std::abs(k1.hess(0, 0) - 1.0) < 1e-15);

  const auto half = FilterModel::arma({0.5}, {});
  const auto k3 = kappa_value_and_derivatives(fixed_kappa(KappaKind::weighted_coords, 10.0, {1.0}), half, half.point());
  CHECK(std::abs(k3.value - 0.25) < 1e-15);
  CHECK(std::abs(k3.grad[0] - 0.5) < 1e-15);
  CHECK(std::abs(k3.hess(0, 0) - 1.0) < 1e-15);

  const auto k2 = kappa_value_and_derivatives(fixed_kappa(KappaKind::weighted_impulse, 10.0), half, half.point());
  CHECK(std::abs(k2.value - 1.0 / 7.0) < 1e-14);
  // d/dx sum 2^-r x^r conj(x)^r = sum r 2^-r x^{r-1} conj(x)^r; at x = 1/2: sum r 8^-r * 2.
  double grad = 0.0;
  for (int r = 1; r < 200; ++r) grad += r * std::pow(0.125, r) * 2.0;
  CHECK(std::abs(k2.grad[0] - grad) < 1e-14);
}

TEST_CASE("analytic kappa jets agree with finite differences") {
  const auto model = FilterModel::arfima(0.2, {Complex(0.3, 0.2), Complex(-0.4, 0.1)}, {Complex(0.1, -0.5)});
  for (const auto kind : {KappaKind::potential, KappaKind::weighted_impulse, KappaKind::weighted_coords}) {
    const auto k = fixed_kappa(kind, 100.0, kind == KappaKind::weighted_coords ? std::vector<double>{1, 2, 3, 4}
                                                                                : std::vector<double>{});
    const ScalarField field = kappa_field(k);
    const FieldJet exact = field.jet(model);
    const FieldJet fd = field.fd_jet(model, 1e-4);
    CHECK(std::abs(exact.value - fd.value) < 1e-12);
    CHECK((exact.grad - fd.grad).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((exact.hess - fd.hess).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("psi values") {
  const auto origin = FilterModel::arma({0.0}, {});
  const auto kappa = fixed_kappa(KappaKind::potential, kZeta2);
  PsiAnsatz power{PsiKind::power, 1.0};
  CHECK(std::abs(psi_value(power, kappa, origin, origin.point()) - 1.6449340668482264) < 1e-15);
  PsiAnsatz logp{PsiKind::log_power, 1.0};
  CHECK(std::abs(psi_value(logp, kappa, origin, origin.point()) - std::log1p(kZeta2)) < 1e-15);
  CHECK(std::abs(psi_value(logp, kappa, origin, origin.point()) - 0.972646137531979) < 1e-15);

  // psi_1 = (u* - K)^a for ARFIMA with u* = (d + p + q)^2 pi^2 / 6.
  const auto arfima = FilterModel::arfima(0.3, {0.4}, {-0.1});
  const auto k = fixed_kappa(KappaKind::potential, kahler_potential_bound(arfima));
  PsiAnsatz half{PsiKind::power, 0.5};
  CHECK(std::abs(psi_value(half, k, arfima, arfima.point()) -
                 std::sqrt(kahler_potential_bound(arfima) - kahler_potential_closed_form(arfima))) < 1e-12);

  // Decreasing in kappa.
  const auto near = FilterModel::arma({0.2}, {});
  const auto far = FilterModel::arma({0.6}, {});
  CHECK(psi_value(half, kappa, near, near.point()) > psi_value(half, kappa, far, far.point()));

  const auto tiny = fixed_kappa(KappaKind::weighted_coords, 0.1, {1.0});
  CHECK_THROWS_AS(psi_value(half, tiny, far, far.point()), DomainError);
}

TEST_CASE("Psi derivatives are positive and concave") {
  for (const auto kind : {PsiKind::power, PsiKind::log_power}) {
    for (const double a : {0.25, 0.5, 1.0}) {
      const PsiAnsatz psi{kind, a};
      for (int k = 1; k <= 400; ++k) {
        const double tau = 5.0 * k / 400.0;
        CHECK(psi.d1(tau) > 0.0);
        CHECK(psi.d2(tau) <= 0.0);
        const double h = 1e-5 * tau;
        CHECK(std::abs(psi.d1(tau) - (psi.value(tau + h) - psi.value(tau - h)) / (2 * h)) <
              1e-6 * std::max(1.0, std::abs(psi.d1(tau))));
      }
    }
  }
  CHECK_THROWS_AS((PsiAnsatz{PsiKind::power, 1.5}.validate()), ConfigurationError);
  CHECK_THROWS_AS((PsiAnsatz{PsiKind::power, 0.0}.validate()), ConfigurationError);
  CHECK_THROWS_AS((PsiAnsatz{PsiKind::power, 1.0}.validate(true)), ConfigurationError);
  CHECK_NOTHROW((PsiAnsatz{PsiKind::power, 1.0}.validate()));
}

TEST_CASE("Laplacian of psi") {
  const PsiAnsatz linear{PsiKind::power, 1.0};
  for (const auto& model : certificate_structures()) {
    const auto kappa = KappaAnsatz::for_domain(KappaKind::potential, model, SamplingDomain{});
    const double n = static_cast<double>(model.dimension());
    CHECK(std::abs(laplacian_of_psi(linear, kappa, model, model.point()) + 2.0 * n) < 1e-6);
  }

  // A constant inner field is harmonic and so is any function of it.
  const auto model = FilterModel::arma({0.3}, {});
  FieldJet constant{2.0, CVector::Zero(1), CMatrix::Zero(1, 1)};
  const FieldJet composed = compose(constant, 2.0, 1.0, 0.0);
  CHECK(laplace_beltrami(metric_closed_form(model), composed) == 0.0);
}

TEST_CASE("analytic Laplacian of psi agrees with the finite-difference Laplacian") {
  LaplacianOptions check;
  check.fd_cross_check = true;
  for (const auto& model : certificate_structures()) {
    const auto points = sample_points(model, SamplingDomain{}, 25, 17);
    for (const auto kind : {KappaKind::potential, KappaKind::weighted_impulse, KappaKind::weighted_coords}) {
      const auto kappa = KappaAnsatz::for_domain(kind, model, SamplingDomain{});
      for (const auto psi_kind : {PsiKind::power, PsiKind::log_power}) {
        for (const double a : {0.25, 0.5, 1.0}) {
          const PsiAnsatz psi{psi_kind, a};
          const ScalarField field = psi_field(psi, kappa);
          for (const auto& pt : points) {
            const FilterModel at = model.at(pt);
            CAPTURE(static_cast<int>(kind));
            CAPTURE(static_cast<int>(psi_kind));
            CAPTURE(a);
            CAPTURE(model.dimension());
            const double exact = laplacian_of_psi(psi, kappa, model, pt);
            const CMatrix h = oracle_hessian([&](const ParamPoint& p) { return field.value(model.at(p)); }, pt);
            const double fd = laplace_beltrami(metric_closed_form(at), FieldJet{0.0, CVector::Zero(h.rows()), h});
            CHECK(std::abs(exact - fd) < 1e-5 * std::max(1.0, std::abs(exact)));
            CHECK(exact <= 0.0);
          }
          CHECK_NOTHROW(laplacian_of_psi(psi, kappa, model, points[0], check));
        }
      }
    }
  }
}

TEST_CASE("u* bounds cover the sampled domain") {
  for (const auto& model : certificate_structures()) {
    for (const auto kind : {KappaKind::potential, KappaKind::weighted_impulse, KappaKind::weighted_coords}) {
      const auto kappa = KappaAnsatz::for_domain(kind, model, SamplingDomain{});
      CHECK(kappa.u_star == doctest::Approx(1.05 * kappa_upper_bound(kappa, model, SamplingDomain{})));
      for (const auto& pt : sample_points(model, SamplingDomain{}, 200, 3)) {
        CHECK(kappa_value_and_derivatives(kappa, model, pt).value < kappa.u_star);
      }
    }
  }
  const auto ar1 = FilterModel::arma({0.3}, {});
  CHECK_THROWS_AS(KappaAnsatz::for_domain(KappaKind::weighted_impulse, ar1, SamplingDomain{}, 1.05, {}, 1.0),
                  ConfigurationError);
  CHECK_THROWS_AS(KappaAnsatz::for_domain(KappaKind::weighted_coords, ar1, SamplingDomain{}, 1.05, {-1.0}),
                  ConfigurationError);
  CHECK_THROWS_AS(KappaAnsatz::for_domain(KappaKind::weighted_coords, ar1, SamplingDomain{}, 1.05, {1.0, 2.0}),
                  ConfigurationError);
}

TEST_CASE("catalog certificates") {
  for (const auto& model : certificate_structures()) {
    for (const auto& id : ansatz_catalog_ids()) {
      CAPTURE(id);
      const auto entry = make_prior(id, model);
      CHECK_FALSE(entry.evaluation_only);
      const auto report = certify_superharmonic(entry.field, model, 60, 11);
      CHECK(report.verdict == Verdict::superharmonic);
      CHECK(report.max_laplacian <= 1e-8);
      CHECK(report.points_checked == 60);
    }
    const auto k = certify_superharmonic(make_prior("potential", model).field, model, 30, 2);
    CHECK(k.verdict == Verdict::violated);
    CHECK(std::abs(k.max_laplacian - 2.0 * static_cast<double>(model.dimension())) < 1e-6);
  }
  CHECK(ansatz_catalog_ids().size() == 18);
}

TEST_CASE("Kahler-AR(2) prior") {
  const auto ar2 = FilterModel::arma({Complex(0.2, 0.3), Complex(-0.5, 0.1)}, {});
  const auto entry = make_prior("kahler-ar2", ar2);
  const FieldJet exact = entry.field.jet(ar2);
  const FieldJet fd = entry.field.fd_jet(ar2, 1e-4);
  CHECK((exact.grad - fd.grad).cwiseAbs().maxCoeff() < 1e-7);
  CHECK((exact.hess - fd.hess).cwiseAbs().maxCoeff() < 1e-6);
  const Complex x1 = ar2.poles()[0];
  const Complex x2 = ar2.poles()[1];
  const double direct = (1 - std::norm(x1)) * std::norm(1.0 - x1 * std::conj(x2)) * (1 - std::norm(x2));
  CHECK(std::abs(exact.value - direct) < 1e-15);
  CHECK(certify_superharmonic(entry.field, ar2, 200, 4).verdict == Verdict::superharmonic);
  CHECK_THROWS_AS(make_prior("kahler-ar2", FilterModel::arma({0.1}, {})), ConfigurationError);
}

TEST_CASE("square-root certificates") {
  const auto model = FilterModel::arfima(0.2, {0.3}, {-0.2});
  const auto full = make_prior("psi1-a1/kappa1", model);
  const auto half = make_prior("psi1-a0.5/kappa1", model);
  const auto a = sqrt_psi_certificate(full.field, model, 80, 6);
  const auto b = certify_superharmonic(half.field, model, 80, 6);
  CHECK(a.verdict == b.verdict);
  CHECK(std::abs(a.max_laplacian - b.max_laplacian) < 1e-10);
  CHECK(std::abs(a.min_laplacian - b.min_laplacian) < 1e-10);

  const auto constant = make_prior("constant", model);
  CHECK(sqrt_psi_certificate(constant.field, model, 20, 1).verdict == Verdict::indeterminate);
  CHECK(certify_superharmonic(constant.field, model, 20, 1).verdict == Verdict::indeterminate);

  const auto ar2 = FilterModel::arma({0.2, -0.5}, {});
  const auto report = sqrt_psi_certificate(make_prior("kahler-ar2", ar2).field, ar2, 50, 2);
  CHECK(report.points_checked == 50);
  const auto exploratory = certify_superharmonic(make_prior("exp-neg-potential", model).field, model, 50, 2);
  CHECK(exploratory.points_checked == 50);
}

TEST_CASE("certificate verdict rule") {
  const auto model = FilterModel::arma({0.3}, {});
  const auto points = sample_points(model, SamplingDomain{}, 5, 1);
  const auto shifted = [&](double lap) {
    // Field with constant Laplacian: lap / (2 g^{11}) |x|^2 ... built from a jet directly.
    return ScalarField("probe", [](const FilterModel&) { return 1.0; },
                       [lap](const FilterModel& at) {
                         const auto metric = metric_closed_form(at);
                         FieldJet j{1.0, CVector::Zero(1), CMatrix::Constant(1, 1, lap / (2.0 * metric.g_inv(0, 0).real()))};
                         return j;
                       });
  };
  CHECK(certify_points(shifted(-1e-3), model, points).verdict == Verdict::superharmonic);
  CHECK(certify_points(shifted(5e-9), model, points).verdict == Verdict::indeterminate);
  CHECK(certify_points(shifted(5e-8), model, points).verdict == Verdict::indeterminate);
  CHECK(certify_points(shifted(2e-7), model, points).verdict == Verdict::violated);
  CHECK(certify_points(shifted(0.0), model, points).verdict == Verdict::indeterminate);
  CHECK_THROWS_AS(certify_points(shifted(0.0), model, {}), DomainError);

  CertifyOptions record;
  record.record_points = true;
  const auto r = certify_points(shifted(-1.0), model, points, record);
  REQUIRE(r.points.size() == points.size());
  CHECK(std::abs(r.points[2].laplacian + 1.0) < 1e-12);
}

TEST_CASE("Tanaka AR(p) prior is evaluation only") {
  const auto real_poles = FilterModel::arma({0.3, -0.5, 0.6}, {});
  const auto entry = make_prior("tanaka-arp", real_poles);
  CHECK(entry.evaluation_only);
  CHECK(std::abs(entry.field.value(real_poles) - (1 + 0.15) * (1 - 0.18) * (1 + 0.3)) < 1e-15);
  const auto pair = FilterModel::arma({Complex(0.3, 0.4), Complex(0.3, -0.4)}, {});
  CHECK(std::abs(tanaka_arp_value(pair) - (1.0 - 0.25)) < 1e-15);
  const auto off_slice = FilterModel::arma({Complex(0.3, 0.4), Complex(0.1, 0.0)}, {});
  CHECK_THROWS_AS(tanaka_arp_value(off_slice), DomainError);
}

TEST_CASE("catalog identifiers") {
  const auto model = FilterModel::arma({0.3}, {});
  CHECK_THROWS_AS(make_prior("psi3-a0.5/kappa1", model), ParseError);
  CHECK_THROWS_AS(make_prior("nonsense", model), ParseError);
  CHECK_THROWS_AS(make_prior("psi1-a1.5/kappa1", model), ConfigurationError);
  CHECK_THROWS_AS(make_prior("tanaka-arp", FilterModel::arma({0.3}, {0.1})), ConfigurationError);
  CHECK(make_prior("psi2-a0.25/kappa3", model).id == "psi2-a0.25/kappa3");
}

TEST_CASE("Jeffreys density and prior values") {
  CHECK(std::abs(jeffreys_density(FilterModel::arma({0.0}, {}), ParamPoint{CVector::Zero(1)}) - 1.0) < 1e-15);
  const auto half = FilterModel::arma({0.5}, {});
  CHECK(std::abs(jeffreys_density(half, half.point()) - 4.0 / 3.0) < 1e-15);
  const auto fi = FilterModel::arfima(0.3, {0.5}, {});
  CHECK(std::abs(jeffreys_density(fi, fi.point()) - (kZeta2 * 4.0 / 3.0 - 4.0 * std::log(0.5) * std::log(0.5))) < 1e-13);

  const auto entry = make_prior("psi1-a0.5/kappa1", fi);
  const auto v = prior_value(entry.field, fi, fi.point());
  CHECK(v.shrinkage == v.psi * v.jeffreys);
  CHECK(v.psi > 0.0);
  CHECK(v.jeffreys > 0.0);
}

TEST_CASE("risk improvement") {
  const auto model = FilterModel::arfima(0.2, {0.3}, {-0.2});
  const auto constant = make_prior("constant", model);
  CHECK(risk_improvement(constant.field, model, model.point(), 10) == 0.0);
  for (const auto& id : ansatz_catalog_ids()) {
    const auto entry = make_prior(id, model);
    for (const auto& pt : sample_points(model, SamplingDomain{}, 20, 8)) {
      const double r = risk_improvement(entry.field, model, pt, 50);
      CHECK(r >= -1e-10);
      CHECK(risk_improvement(entry.field, model, pt, 100) == r / 4.0);
    }
  }
  const ScalarField negative("negative", [](const FilterModel&) { return -1.0; });
  CHECK_THROWS_AS(risk_improvement(negative, model, model.point(), 10), DomainError);
  CHECK_THROWS_AS(risk_improvement(constant.field, model, model.point(), 0), DomainError);
}

TEST_CASE("ARFIMA priors at d = 0 reduce to ARMA priors") {
  const std::vector<Complex> poles{Complex(0.3, 0.4), Complex(-0.6, 0.0)};
  const std::vector<Complex> roots{Complex(0.1, -0.5)};
  const auto arma = FilterModel::arma(poles, roots);
  const auto arfima = FilterModel::arfima(0.0, poles, roots);
  for (const auto kind : {KappaKind::potential, KappaKind::weighted_impulse}) {
    const auto kappa = KappaAnsatz::for_domain(kind, arma, SamplingDomain{});
    for (const auto psi_kind : {PsiKind::power, PsiKind::log_power}) {
      const PsiAnsatz psi{psi_kind, 0.5};
      CHECK(psi_value(psi, kappa, arma, arma.point()) == psi_value(psi, kappa, arfima, arfima.point()));
    }
  }
  CHECK(kahler_potential(arma) == kahler_potential(arfima));
}

TEST_CASE("certificates do not depend on the worker count") {
  const auto model = FilterModel::arfima(0.2, {0.3}, {-0.2});
  const auto entry = make_prior("psi2-a0.5/kappa2", model);
  setenv("KFP_THREADS", "1", 1);
  const auto one = certify_superharmonic(entry.field, model, 40, 3);
  setenv("KFP_THREADS", "3", 1);
  const auto three = certify_superharmonic(entry.field, model, 40, 3);
  unsetenv("KFP_THREADS");
  CHECK(one.max_laplacian == three.max_laplacian);
  CHECK(one.min_laplacian == three.min_laplacian);
  CHECK(one.worst_point.coords == three.worst_point.coords);
}

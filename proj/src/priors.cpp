#include "kfp/priors.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>

#include "kfp/errors.hpp"
#include "kfp/special.hpp"
#include "kfp/wirtinger.hpp"

namespace kfp {

namespace {

/// sup |h_r| over r via the majorant gain * prod (1 + |mu|) / prod (1 - |lambda|),
/// valid for |d| <= 1.
double impulse_majorant(double gain, int p, int q, double pole_radius, double root_radius) {
  return gain * std::pow(1.0 + root_radius, q) / std::pow(1.0 - pole_radius, p);
}

double impulse_majorant(const FilterModel& model) {
  double m = model.gain();
  for (const Complex mu : model.roots()) m *= 1.0 + std::abs(mu);
  for (const Complex lambda : model.poles()) m /= 1.0 - std::abs(lambda);
  return m;
}

std::size_t weighted_impulse_truncation(const FilterModel& model, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigurationError("kappa_2 weight ratio must lie in (0, 1)");
  }
  if (std::abs(model.d()) > 1.0) {
    throw ConfigurationError("kappa_2 is only bounded here for |d| <= 1");
  }
  const double rho = model.spectral_radius();
  const double m = impulse_majorant(model) / ((1.0 - rho) * (1.0 - rho));
  std::size_t r = std::max<std::size_t>(default_truncation(model), 8);
  double weight = std::pow(ratio, static_cast<double>(r));
  while (weight * (r + 1.0) * (r + 1.0) * m * m / (1.0 - ratio) > 1e-17) {
    ++r;
    weight *= ratio;
    if (r > 100000) throw PrecisionError("kappa_2 truncation did not converge");
  }
  return r;
}

FieldJet potential_jet(const FilterModel& model) {
  const std::size_t r_max = default_truncation(model);
  const CepstrumSeries cep = cepstrum_coeffs(model, r_max);
  const auto n = static_cast<Eigen::Index>(model.dimension());
  FieldJet jet;
  // The closed form is smooth in the coordinates; the truncated series jumps
  // by up to the truncation tolerance wherever R changes.
  jet.value = kahler_potential_closed_form(model);
  const double tail = special::inverse_square_tail(r_max);
  jet.grad = CVector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto deriv = holomorphic_param_derivative(model, SeriesKind::cepstrum,
                                                    static_cast<std::size_t>(i), r_max);
    Complex sum = 0.0;
    for (std::size_t r = 0; r < r_max; ++r) sum += deriv[r] * std::conj(cep.coeffs[r]);
    jet.grad[i] = sum;
  }
  if (model.has_fi()) jet.grad[0] += std::conj(model.d()) * tail;
  jet.hess = metric_series_matrix(model, r_max);
  return jet;
}

FieldJet weighted_impulse_jet(const FilterModel& model, double ratio) {
  const std::size_t r_max = weighted_impulse_truncation(model, ratio);
  const auto h = impulse_response(model, r_max).coeffs;
  const auto n = static_cast<Eigen::Index>(model.dimension());
  std::vector<double> weight(r_max + 1);
  weight[0] = 1.0;
  for (std::size_t r = 1; r <= r_max; ++r) weight[r] = weight[r - 1] * ratio;

  CMatrix derivs(static_cast<Eigen::Index>(r_max + 1), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto col = holomorphic_param_derivative(model, SeriesKind::impulse,
                                                  static_cast<std::size_t>(i), r_max);
    for (std::size_t r = 0; r <= r_max; ++r) derivs(static_cast<Eigen::Index>(r), i) = col[r];
  }
  FieldJet jet;
  jet.value = 0.0;
  jet.grad = CVector::Zero(n);
  jet.hess = CMatrix::Zero(n, n);
  // h_0 is the gain, constant on the manifold, so the sum starts at r = 1.
  for (std::size_t r = 1; r <= r_max; ++r) {
    const auto rr = static_cast<Eigen::Index>(r);
    jet.value += weight[r] * std::norm(h[r]);
    const CVector row = derivs.row(rr).transpose();
    jet.grad += weight[r] * std::conj(h[r]) * row;
    jet.hess += weight[r] * (row * row.adjoint());
  }
  return jet;
}

std::vector<double> coordinate_weights(const KappaAnsatz& ansatz, std::size_t n) {
  if (ansatz.weights.empty()) return std::vector<double>(n, 1.0);
  if (ansatz.weights.size() != n) {
    throw ConfigurationError("kappa_3 needs one weight per coordinate (" + std::to_string(n) +
                             "), got " + std::to_string(ansatz.weights.size()));
  }
  for (const double b : ansatz.weights) {
    if (!(b > 0.0)) throw ConfigurationError("kappa_3 weights must be positive");
  }
  return ansatz.weights;
}

FieldJet weighted_coords_jet(const KappaAnsatz& ansatz, const FilterModel& model) {
  const ParamPoint pt = model.point();
  const auto n = static_cast<Eigen::Index>(model.dimension());
  const auto b = coordinate_weights(ansatz, model.dimension());
  FieldJet jet;
  jet.value = 0.0;
  jet.grad = CVector::Zero(n);
  jet.hess = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double bi = b[static_cast<std::size_t>(i)];
    jet.value += bi * std::norm(pt[i]);
    jet.grad[i] = bi * std::conj(pt[i]);
    jet.hess(i, i) = bi;
  }
  return jet;
}

FieldJet kappa_jet_at(const KappaAnsatz& ansatz, const FilterModel& at) {
  switch (ansatz.kind) {
    case KappaKind::potential:
      return potential_jet(at);
    case KappaKind::weighted_impulse:
      return weighted_impulse_jet(at, ansatz.weight_ratio);
    case KappaKind::weighted_coords:
      return weighted_coords_jet(ansatz, at);
  }
  throw ConsistencyError("unknown kappa kind");
}

double checked_tau(const KappaAnsatz& kappa, double kappa_value) {
  const double tau = kappa.u_star - kappa_value;
  if (!(tau > 0.0)) {
    std::ostringstream msg;
    msg << "kappa = " << kappa_value << " reaches u* = " << kappa.u_star
        << "; u* must exceed the supremum of kappa";
    throw DomainError(msg.str());
  }
  return tau;
}

FieldJet psi_jet_at(const PsiAnsatz& psi, const KappaAnsatz& kappa, const FilterModel& at) {
  const FieldJet inner = kappa_jet_at(kappa, at);
  const double tau = checked_tau(kappa, inner.value);
  return compose(inner, psi.value(tau), -psi.d1(tau), psi.d2(tau));
}

std::string format_exponent(double a) {
  std::ostringstream out;
  out << a;
  return out.str();
}

/// Jet of prod_k (1 - x_{a_k} conj(x_{b_k})).
FieldJet sesquilinear_product_jet(const ParamPoint& pt,
                                  const std::vector<std::pair<Eigen::Index, Eigen::Index>>& pairs) {
  const Eigen::Index n = pt.size();
  const std::size_t m = pairs.size();
  std::vector<Complex> f(m);
  for (std::size_t k = 0; k < m; ++k) {
    f[k] = 1.0 - pt[pairs[k].first] * std::conj(pt[pairs[k].second]);
  }
  const auto product_except = [&](std::size_t skip1, std::size_t skip2) {
    Complex p = 1.0;
    for (std::size_t k = 0; k < m; ++k) {
      if (k != skip1 && k != skip2) p *= f[k];
    }
    return p;
  };
  Complex value = product_except(m, m);
  CVector grad = CVector::Zero(n);
  CMatrix hess = CMatrix::Zero(n, n);
  for (std::size_t k = 0; k < m; ++k) {
    const auto [a, b] = pairs[k];
    const Complex rest = product_except(k, m);
    // d_a f_k = -conj(x_b), d_bbar f_k = -x_a, d_a d_bbar f_k = -1.
    grad[a] += -std::conj(pt[b]) * rest;
    hess(a, b) += -rest;
    for (std::size_t l = 0; l < m; ++l) {
      if (l == k) continue;
      const auto [c, e] = pairs[l];
      hess(a, e) += (-std::conj(pt[b])) * (-pt[c]) * product_except(k, l);
    }
  }
  if (std::abs(value.imag()) > 1e-12 * std::max(1.0, std::abs(value))) {
    throw ConsistencyError("sesquilinear product prior is not real");
  }
  return FieldJet{value.real(), std::move(grad), std::move(hess)};
}

}  // namespace

// ---------------------------------------------------------------------------

double kappa_upper_bound(const KappaAnsatz& ansatz, const FilterModel& structure,
                         const SamplingDomain& domain) {
  const double d_bound = structure.has_fi() ? domain.d_max : 0.0;
  switch (ansatz.kind) {
    case KappaKind::potential: {
      const double c = d_bound + structure.p() + structure.q();
      return c * c * kZeta2;
    }
    case KappaKind::weighted_impulse: {
      if (d_bound > 1.0) throw ConfigurationError("kappa_2 bound needs d_max <= 1");
      if (!(ansatz.weight_ratio > 0.0 && ansatz.weight_ratio < 1.0)) {
        throw ConfigurationError("kappa_2 weight ratio must lie in (0, 1)");
      }
      const double m = impulse_majorant(structure.gain(), structure.p(), structure.q(),
                                        domain.pole_radius, domain.pole_radius);
      return m * m * ansatz.weight_ratio / (1.0 - ansatz.weight_ratio);
    }
    case KappaKind::weighted_coords: {
      const auto b = coordinate_weights(ansatz, structure.dimension());
      double sum = 0.0;
      for (std::size_t i = 0; i < b.size(); ++i) {
        const bool is_d = structure.has_fi() && i == 0;
        const double r = is_d ? d_bound : domain.pole_radius;
        sum += b[i] * r * r;
      }
      return sum;
    }
  }
  throw ConsistencyError("unknown kappa kind");
}

KappaAnsatz KappaAnsatz::for_domain(KappaKind kind, const FilterModel& structure,
                                    const SamplingDomain& domain, double margin,
                                    std::vector<double> weights, double weight_ratio) {
  if (!(margin > 1.0)) throw ConfigurationError("u* margin must exceed 1");
  KappaAnsatz ansatz;
  ansatz.kind = kind;
  ansatz.weights = std::move(weights);
  ansatz.weight_ratio = weight_ratio;
  const double bound = kappa_upper_bound(ansatz, structure, domain);
  // A zero bound (e.g. p = q = 0 without d) still needs tau > 0.
  ansatz.u_star = bound > 0.0 ? margin * bound : margin - 1.0;
  return ansatz;
}

void PsiAnsatz::validate(bool kappa_harmonic) const {
  const bool ok = kappa_harmonic ? (exponent > 0.0 && exponent < 1.0)
                                 : (exponent > 0.0 && exponent <= 1.0);
  if (!ok) {
    throw ConfigurationError("Psi exponent " + format_exponent(exponent) + " outside " +
                             (kappa_harmonic ? "(0, 1)" : "(0, 1]"));
  }
}

double PsiAnsatz::value(double tau) const {
  const double ta = std::pow(tau, exponent);
  return kind == PsiKind::power ? ta : std::log1p(ta);
}

double PsiAnsatz::d1(double tau) const {
  const double a = exponent;
  const double d = a * std::pow(tau, a - 1.0);
  return kind == PsiKind::power ? d : d / (1.0 + std::pow(tau, a));
}

double PsiAnsatz::d2(double tau) const {
  const double a = exponent;
  if (kind == PsiKind::power) return a * (a - 1.0) * std::pow(tau, a - 2.0);
  const double ta = std::pow(tau, a);
  return a * std::pow(tau, a - 2.0) * (a - (1.0 + ta)) / ((1.0 + ta) * (1.0 + ta));
}

FieldJet kappa_value_and_derivatives(const KappaAnsatz& ansatz, const FilterModel& model,
                                     const ParamPoint& point) {
  return kappa_jet_at(ansatz, model.at(point));
}

double psi_value(const PsiAnsatz& psi, const KappaAnsatz& kappa, const FilterModel& model,
                 const ParamPoint& point) {
  const FilterModel at = model.at(point);
  double k = 0.0;
  switch (kappa.kind) {
    case KappaKind::potential:
      k = kahler_potential_closed_form(at);
      break;
    default:
      k = kappa_jet_at(kappa, at).value;
  }
  return psi.value(checked_tau(kappa, k));
}

double laplacian_of_psi(const PsiAnsatz& psi, const KappaAnsatz& kappa, const FilterModel& model,
                        const ParamPoint& point, const LaplacianOptions& options) {
  const FilterModel at = model.at(point);
  const FieldJet k = kappa_jet_at(kappa, at);
  const double tau = checked_tau(kappa, k.value);
  const HermitianMetric metric = metric_closed_form(at);

  const double grad_norm = (k.grad.adjoint() * metric.g_inv * k.grad)(0, 0).real();
  const double lap_kappa = laplace_beltrami(metric, k);
  const double lap = 2.0 * psi.d2(tau) * grad_norm - psi.d1(tau) * lap_kappa;

  if (options.fd_cross_check) {
    const auto value = [&](const ParamPoint& p) { return psi_value(psi, kappa, model, p); };
    FieldJet fd_jet{tau, CVector::Zero(k.grad.size()),
                    wirtinger::mixed_hessian_richardson(value, point, options.fd_rel_step)};
    const double fd = laplace_beltrami(metric, fd_jet);
    if (std::abs(fd - lap) > options.consistency_tolerance * std::max(1.0, std::abs(lap))) {
      std::ostringstream msg;
      msg << "analytic Laplacian " << lap << " disagrees with finite differences " << fd;
      throw ConsistencyError(msg.str());
    }
  }
  return lap;
}

ScalarField kappa_field(const KappaAnsatz& kappa) {
  std::string id = kappa.kind == KappaKind::potential          ? "kappa1"
                   : kappa.kind == KappaKind::weighted_impulse ? "kappa2"
                                                               : "kappa3";
  return ScalarField(
      id,
      [kappa](const FilterModel& at) {
        return kappa.kind == KappaKind::potential ? kahler_potential_closed_form(at)
                                                  : kappa_jet_at(kappa, at).value;
      },
      [kappa](const FilterModel& at) { return kappa_jet_at(kappa, at); });
}

ScalarField psi_field(const PsiAnsatz& psi, const KappaAnsatz& kappa) {
  const std::string id = std::string(psi.kind == PsiKind::power ? "psi1" : "psi2") + "-a" +
                         format_exponent(psi.exponent) + "/" + kappa_field(kappa).id();
  return ScalarField(
      id,
      [psi, kappa](const FilterModel& at) { return psi_value(psi, kappa, at, at.point()); },
      [psi, kappa](const FilterModel& at) { return psi_jet_at(psi, kappa, at); });
}

ScalarField potential_field() {
  return ScalarField(
      "potential", [](const FilterModel& at) { return kahler_potential_closed_form(at); },
      [](const FilterModel& at) { return potential_jet(at); });
}

ScalarField kahler_ar2_field() {
  const auto check = [](const FilterModel& at) {
    if (at.p() != 2 || at.q() != 0 || at.has_fi()) {
      throw ConfigurationError("kahler-ar2 is defined on AR(2) models only");
    }
  };
  static const std::vector<std::pair<Eigen::Index, Eigen::Index>> kPairs = {
      {0, 0}, {0, 1}, {1, 0}, {1, 1}};
  return ScalarField(
      "kahler-ar2",
      [check](const FilterModel& at) {
        check(at);
        return sesquilinear_product_jet(at.point(), kPairs).value;
      },
      [check](const FilterModel& at) {
        check(at);
        return sesquilinear_product_jet(at.point(), kPairs);
      });
}

double tanaka_arp_value(const FilterModel& model) {
  const auto poles = model.poles();
  Complex value = 1.0;
  for (std::size_t i = 0; i < poles.size(); ++i) {
    for (std::size_t j = i + 1; j < poles.size(); ++j) value *= 1.0 - poles[i] * poles[j];
  }
  if (std::abs(value.imag()) > 1e-12 * std::max(1.0, std::abs(value))) {
    throw DomainError("tanaka-arp is defined on the real-AR manifold (real poles or conjugate pairs)");
  }
  return value.real();
}

CatalogEntry make_prior(std::string_view id, const FilterModel& structure,
                        const CatalogOptions& options) {
  const std::string key(id);
  static const std::regex kAnsatz(R"(psi([12])-a([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)/kappa([123]))");
  std::smatch match;
  if (std::regex_match(key, match, kAnsatz)) {
    PsiAnsatz psi;
    psi.kind = match[1] == "1" ? PsiKind::power : PsiKind::log_power;
    psi.exponent = std::stod(match[2]);
    psi.validate();
    const KappaKind kind = match[3] == "1"   ? KappaKind::potential
                           : match[3] == "2" ? KappaKind::weighted_impulse
                                             : KappaKind::weighted_coords;
    const KappaAnsatz kappa = KappaAnsatz::for_domain(kind, structure, options.domain,
                                                      options.u_star_margin, {},
                                                      options.kappa2_ratio);
    ScalarField field = psi_field(psi, kappa);
    return CatalogEntry{key, ScalarField(key, [field](const FilterModel& at) { return field.value(at); },
                                         [field](const FilterModel& at) { return field.jet(at); }),
                        false};
  }
  if (key == "kahler-ar2") {
    if (structure.p() != 2 || structure.q() != 0 || structure.has_fi()) {
      throw ConfigurationError("kahler-ar2 is defined on AR(2) models only");
    }
    return CatalogEntry{key, kahler_ar2_field(), false};
  }
  if (key == "tanaka-arp") {
    if (structure.q() != 0 || structure.has_fi()) {
      throw ConfigurationError("tanaka-arp is defined on AR(p) models only");
    }
    return CatalogEntry{key, ScalarField(key, [](const FilterModel& at) { return tanaka_arp_value(at); }),
                        true};
  }
  if (key == "potential") return CatalogEntry{key, potential_field(), false};
  if (key == "exp-neg-potential") {
    return CatalogEntry{
        key,
        ScalarField(
            key, [](const FilterModel& at) { return std::exp(-kahler_potential_closed_form(at)); },
            [](const FilterModel& at) {
              const FieldJet k = potential_jet(at);
              const double e = std::exp(-k.value);
              return compose(k, e, -e, e);
            }),
        false};
  }
  if (key == "constant" || key == "jeffreys") {
    ScalarField c = constant_field(1.0);
    return CatalogEntry{key, ScalarField(key, [c](const FilterModel& at) { return c.value(at); },
                                         [c](const FilterModel& at) { return c.jet(at); }),
                        false};
  }
  throw ParseError("unknown prior identifier '" + key + "'");
}

std::vector<std::string> ansatz_catalog_ids() {
  std::vector<std::string> ids;
  for (const char* psi : {"psi1", "psi2"}) {
    for (const char* a : {"0.25", "0.5", "1"}) {
      for (const char* kappa : {"kappa1", "kappa2", "kappa3"}) {
        ids.push_back(std::string(psi) + "-a" + a + "/" + kappa);
      }
    }
  }
  return ids;
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::superharmonic:
      return "superharmonic";
    case Verdict::indeterminate:
      return "indeterminate";
    case Verdict::violated:
      return "violated";
  }
  return "unknown";
}

SuperharmonicityReport certify_points(const ScalarField& field, const FilterModel& model,
                                      const std::vector<ParamPoint>& points,
                                      const CertifyOptions& options) {
  if (points.empty()) throw DomainError("certificate needs at least one point");
  std::vector<double> laplacians(points.size());
  parallel_for(points.size(), [&](std::size_t s) {
    const FilterModel at = model.at(points[s]);
    laplacians[s] = laplace_beltrami(metric_closed_form(at), field.jet(at));
  });

  SuperharmonicityReport report;
  report.field_id = field.id();
  report.tolerance = options.tolerance;
  report.points_checked = points.size();
  report.max_laplacian = laplacians[0];
  report.min_laplacian = laplacians[0];
  std::size_t worst = 0;
  for (std::size_t s = 1; s < points.size(); ++s) {
    if (laplacians[s] > report.max_laplacian) {
      report.max_laplacian = laplacians[s];
      worst = s;
    }
    report.min_laplacian = std::min(report.min_laplacian, laplacians[s]);
  }
  report.worst_point = points[worst];
  if (report.max_laplacian > options.violation_factor * options.tolerance) {
    report.verdict = Verdict::violated;
  } else if (report.max_laplacian <= options.tolerance &&
             report.min_laplacian < -options.tolerance) {
    report.verdict = Verdict::superharmonic;
  } else {
    report.verdict = Verdict::indeterminate;
  }
  if (options.record_points) {
    report.points.reserve(points.size());
    for (std::size_t s = 0; s < points.size(); ++s) report.points.push_back({points[s], laplacians[s]});
  }
  return report;
}

SuperharmonicityReport certify_superharmonic(const ScalarField& field, const FilterModel& model,
                                             std::size_t sample_count, std::uint64_t seed,
                                             const CertifyOptions& options) {
  if (sample_count < 1) throw DomainError("certificate needs at least one sample");
  return certify_points(field, model, sample_points(model, options.domain, sample_count, seed),
                        options);
}

SuperharmonicityReport sqrt_psi_certificate(const ScalarField& field, const FilterModel& model,
                                            std::size_t sample_count, std::uint64_t seed,
                                            const CertifyOptions& options) {
  return certify_superharmonic(sqrt_field(field), model, sample_count, seed, options);
}

double jeffreys_density(const FilterModel& model, const ParamPoint& point) {
  return metric_closed_form(model, point).det;
}

PriorValue prior_value(const ScalarField& psi, const FilterModel& model, const ParamPoint& point) {
  const FilterModel at = model.at(point);
  PriorValue v;
  v.psi = psi.value(at);
  if (!(v.psi > 0.0)) throw DomainError("prior function must be positive");
  v.jeffreys = metric_closed_form(at).det;
  v.shrinkage = v.psi * v.jeffreys;
  return v;
}

double risk_improvement(const ScalarField& psi, const FilterModel& model, const ParamPoint& point,
                        std::uint64_t sample_size) {
  if (sample_size < 1) throw DomainError("sample size must be positive");
  const FilterModel at = model.at(point);
  const FieldJet jet = psi.jet(at);
  if (!(jet.value > 0.0)) throw DomainError("prior function must be positive for the risk formula");
  const HermitianMetric metric = metric_closed_form(at);
  const CVector grad_log = jet.grad / jet.value;
  const double gradient_term = (grad_log.adjoint() * metric.g_inv * grad_log)(0, 0).real();
  const double laplacian_term = laplace_beltrami(metric, jet) / jet.value;
  const double n = static_cast<double>(sample_size);
  return (gradient_term - laplacian_term) / (n * n);
}

}  // namespace kfp

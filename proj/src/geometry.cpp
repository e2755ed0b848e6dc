#include "kfp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kfp/errors.hpp"
#include "kfp/special.hpp"
#include "kfp/wirtinger.hpp"

namespace kfp {

namespace {

double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// log det of a Hermitian positive-definite matrix via Cholesky.
double log_det_hpd(const CMatrix& g) {
  Eigen::LLT<CMatrix> llt(g);
  if (llt.info() != Eigen::Success) throw GeometryError("metric is not positive definite");
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < g.rows(); ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i).real());
  return log_det;
}

}  // namespace

HermitianMetric make_hermitian_metric(const CMatrix& g) {
  if (g.rows() != g.cols()) throw GeometryError("metric must be square");
  const double scale = std::max(1.0, max_abs(g));
  if (max_abs(g - g.adjoint()) > 1e-12 * scale) {
    throw GeometryError("metric is not Hermitian");
  }
  HermitianMetric m;
  m.g = 0.5 * (g + g.adjoint());
  const Eigen::Index n = m.g.rows();
  if (n == 0) {
    m.g_inv = m.g;
    m.det = 1.0;
    return m;
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(m.g, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) {
    std::ostringstream msg;
    msg << "metric is not positive definite (smallest eigenvalue " << lo
        << "); the model is close to degenerate";
    throw GeometryError(msg.str());
  }
  Eigen::LLT<CMatrix> llt(m.g);
  if (llt.info() != Eigen::Success) throw GeometryError("metric Cholesky factorization failed");
  m.log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) m.log_det += 2.0 * std::log(llt.matrixL()(i, i).real());
  m.det = std::exp(m.log_det);
  const CMatrix inv = llt.solve(CMatrix::Identity(n, n));
  m.g_inv = 0.5 * (inv + inv.adjoint());
  m.condition_estimate = hi / lo;
  return m;
}

double kahler_potential_series(const FilterModel& model, std::size_t r_max) {
  const CepstrumSeries cep = cepstrum_coeffs(model, r_max);
  double sum = 0.0;
  for (const Complex eta : cep.coeffs) sum += std::norm(eta);
  return sum + std::norm(model.d()) * special::inverse_square_tail(r_max);
}

double kahler_potential(const FilterModel& model) {
  return kahler_potential_series(model, default_truncation(model));
}

double kahler_potential(const FilterModel& model, const ParamPoint& point) {
  return kahler_potential(model.at(point));
}

double kahler_potential_closed_form(const FilterModel& model) {
  using special::dilog;
  const auto poles = model.poles();
  const auto roots = model.roots();
  const Complex d = model.d();

  Complex linear = 0.0;  // sum_r S_r / r^2
  for (const Complex lambda : poles) linear += dilog(lambda);
  for (const Complex mu : roots) linear -= dilog(mu);

  double quadratic = 0.0;  // sum_r |S_r|^2 / r^2
  for (const Complex a : poles) {
    for (const Complex b : poles) quadratic += dilog(a * std::conj(b)).real();
    for (const Complex b : roots) quadratic -= 2.0 * dilog(a * std::conj(b)).real();
  }
  for (const Complex a : roots) {
    for (const Complex b : roots) quadratic += dilog(a * std::conj(b)).real();
  }
  return std::norm(d) * kZeta2 - 2.0 * (linear * std::conj(d)).real() + quadratic;
}

double kahler_potential_bound(const FilterModel& model) {
  const double c = std::abs(model.d()) + model.p() + model.q();
  return c * c * kZeta2;
}

CMatrix metric_series_matrix(const FilterModel& model, std::size_t r_max) {
  const auto n = static_cast<Eigen::Index>(model.dimension());
  CMatrix derivs(static_cast<Eigen::Index>(r_max), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto col = holomorphic_param_derivative(model, SeriesKind::cepstrum,
                                                  static_cast<std::size_t>(i), r_max);
    for (std::size_t r = 0; r < r_max; ++r) derivs(static_cast<Eigen::Index>(r), i) = col[r];
  }
  // Per-entry sums over r; summation order does not depend on n.
  CMatrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Complex s(0.0, 0.0);
      for (Eigen::Index r = 0; r < derivs.rows(); ++r) s += derivs(r, i) * std::conj(derivs(r, j));
      g(i, j) = s;
    }
  }
  if (model.has_fi()) g(0, 0) += special::inverse_square_tail(r_max);
  return g;
}

HermitianMetric metric_series(const FilterModel& model, const ParamPoint& point,
                              std::optional<std::size_t> r_max) {
  const FilterModel at = model.at(point);
  return make_hermitian_metric(metric_series_matrix(at, r_max ? *r_max : default_truncation(at)));
}

HermitianMetric metric_series(const FilterModel& model) {
  return metric_series(model, model.point());
}

CMatrix metric_closed_form_matrix(const FilterModel& model) {
  using special::log1m_over;
  const auto n = static_cast<Eigen::Index>(model.dimension());
  const auto poles = model.poles();
  const auto roots = model.roots();

  // Signed holomorphic coordinates: +lambda for poles, -mu for roots enter
  // every ARMA entry as s_i s_j / (1 - x_i conj(x_j)).
  std::vector<Complex> x;
  std::vector<double> sign;
  for (const Complex lambda : poles) {
    x.push_back(lambda);
    sign.push_back(1.0);
  }
  for (const Complex mu : roots) {
    x.push_back(mu);
    sign.push_back(-1.0);
  }
  const Eigen::Index off = model.has_fi() ? 1 : 0;
  CMatrix g(n, n);
  if (model.has_fi()) {
    g(0, 0) = kZeta2;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k) + off;
      g(kk, 0) = sign[k] * log1m_over(x[k]);
      g(0, kk) = sign[k] * log1m_over(std::conj(x[k]));
    }
  }
  for (std::size_t a = 0; a < x.size(); ++a) {
    for (std::size_t b = 0; b < x.size(); ++b) {
      g(static_cast<Eigen::Index>(a) + off, static_cast<Eigen::Index>(b) + off) =
          sign[a] * sign[b] / (1.0 - x[a] * std::conj(x[b]));
    }
  }
  return g;
}

HermitianMetric metric_closed_form(const FilterModel& model, const ParamPoint& point) {
  return make_hermitian_metric(metric_closed_form_matrix(model.at(point)));
}

HermitianMetric metric_closed_form(const FilterModel& model) {
  return make_hermitian_metric(metric_closed_form_matrix(model));
}

ConnectionTensor connection(const FilterModel& model, const ParamPoint& point) {
  const FilterModel at = model.at(point);
  const std::size_t n = at.dimension();
  ConnectionTensor gamma(n);
  std::vector<Complex> x;
  std::vector<double> sign;
  for (const Complex lambda : at.poles()) {
    x.push_back(lambda);
    sign.push_back(1.0);
  }
  for (const Complex mu : at.roots()) {
    x.push_back(mu);
    sign.push_back(-1.0);
  }
  const std::size_t off = at.has_fi() ? 1 : 0;
  for (std::size_t a = 0; a < x.size(); ++a) {
    const std::size_t j = a + off;
    if (at.has_fi()) gamma(j, j, 0) = sign[a] * special::log1m_over_derivative(x[a]);
    for (std::size_t b = 0; b < x.size(); ++b) {
      const Complex xb = std::conj(x[b]);
      const Complex denom = 1.0 - x[a] * xb;
      gamma(j, j, b + off) = sign[a] * sign[b] * xb / (denom * denom);
    }
  }
  return gamma;
}

RicciResult ricci(const FilterModel& model, const ParamPoint& point, const RicciOptions& options) {
  const auto log_det = [&model](const ParamPoint& p) {
    return log_det_hpd(metric_closed_form_matrix(model.at(p)));
  };
  RicciResult out;
  const CMatrix h = options.stencil == RicciStencil::richardson
                        ? wirtinger::mixed_hessian_richardson(log_det, point, options.rel_step)
                        : wirtinger::mixed_hessian(log_det, point, options.rel_step);
  out.r = -h;
  out.precision_warning =
      metric_closed_form(model, point).condition_estimate > options.condition_warning;
  return out;
}

CMatrix ricci_mixing_correction(const FilterModel& model, const ParamPoint& point,
                                const RicciOptions& options) {
  if (!model.has_fi()) throw DomainError("mixing correction needs a fractional coordinate");
  const auto log_schur = [&model](const ParamPoint& p) {
    const CMatrix g = metric_closed_form_matrix(model.at(p));
    const Eigen::Index m = g.rows() - 1;
    if (m == 0) return std::log(g(0, 0).real());
    const CMatrix arma = g.bottomRightCorner(m, m);
    const CVector column = g.bottomLeftCorner(m, 1);
    const CVector solved = arma.llt().solve(column);
    const double s = (g(0, 0) - (g.topRightCorner(1, m) * solved)(0, 0)).real();
    if (!(s > 0.0)) throw GeometryError("Schur complement of the ARMA block is not positive");
    return std::log(s);
  };
  const CMatrix h = options.stencil == RicciStencil::richardson
                        ? wirtinger::mixed_hessian_richardson(log_schur, point, options.rel_step)
                        : wirtinger::mixed_hessian(log_schur, point, options.rel_step);
  return -h;
}

double laplace_beltrami(const HermitianMetric& metric, const FieldJet& jet) {
  const Eigen::Index n = metric.dimension();
  if (jet.hess.rows() != n || jet.hess.cols() != n) {
    throw DomainError("field jet dimension does not match the metric");
  }
  Complex trace = 0.0;
  double magnitude = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const Complex term = metric.g_inv(j, i) * jet.hess(i, j);
      trace += term;
      magnitude += std::abs(term);
    }
  }
  if (std::abs(trace.imag()) > 1e-10 * std::max(1.0, magnitude)) {
    std::ostringstream msg;
    msg << "Laplace-Beltrami contraction has imaginary residue " << trace.imag();
    throw ConsistencyError(msg.str());
  }
  return 2.0 * trace.real();
}

double laplace_beltrami(const HermitianMetric& metric, const ScalarField& field,
                        const FilterModel& at) {
  return laplace_beltrami(metric, field.jet(at));
}

CMatrix holomorphic_metric_block(const FilterModel& model, const ParamPoint& point, double radius,
                                 int nodes) {
  const FilterModel center = model.at(point);
  const auto n = static_cast<Eigen::Index>(center.dimension());
  if (!(radius > std::max(1.0, center.spectral_radius()))) {
    throw DomainError("contour radius must exceed 1 and the spectral radius");
  }
  std::vector<FilterModel> plus;
  std::vector<FilterModel> minus;
  std::vector<double> steps;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = wirtinger::step_for(point, i, 1e-6);
    ParamPoint p = point;
    p[i] += h;
    plus.push_back(center.at(p));
    p[i] -= 2.0 * h;
    minus.push_back(center.at(p));
    steps.push_back(h);
  }
  CMatrix g = CMatrix::Zero(n, n);
  CVector dlog(n);
  for (int m = 0; m < nodes; ++m) {
    const Complex z = std::polar(radius, 2.0 * std::numbers::pi * m / nodes);
    const Complex h0 = center.transfer_function(z);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      dlog[i] = (plus[k].transfer_function(z) - minus[k].transfer_function(z)) / (2.0 * steps[k] * h0);
    }
    g += dlog * dlog.transpose();
  }
  return g / static_cast<double>(nodes);
}

KahlerCertificate certify_kahler(const KahlerProbe& probe, const std::vector<ParamPoint>& points,
                                 const KahlerOptions& options) {
  std::vector<double> hermitian(points.size(), 0.0);
  std::vector<double> closed(points.size(), 0.0);
  parallel_for(points.size(), [&](std::size_t s) {
    const ParamPoint& pt = points[s];
    if (probe.holomorphic_block) hermitian[s] = max_abs(probe.holomorphic_block(pt));
    const Eigen::Index n = pt.size();
    std::vector<CMatrix> holo;
    std::vector<CMatrix> anti;
    for (Eigen::Index i = 0; i < n; ++i) {
      holo.push_back(wirtinger::matrix_partial(probe.hermitian_block, pt, i, false, options.fd_rel_step));
      anti.push_back(wirtinger::matrix_partial(probe.hermitian_block, pt, i, true, options.fd_rel_step));
    }
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
          // d_i g_{j kbar} = d_j g_{i kbar} and d_ibar g_{k jbar} = d_jbar g_{k ibar}
          worst = std::max(worst, std::abs(holo[i](j, k) - holo[j](i, k)));
          worst = std::max(worst, std::abs(anti[i](k, j) - anti[j](k, i)));
        }
      }
    }
    closed[s] = worst;
  });
  KahlerCertificate cert;
  cert.sampled_points = points.size();
  for (std::size_t s = 0; s < points.size(); ++s) {
    cert.hermitian_residual = std::max(cert.hermitian_residual, hermitian[s]);
    cert.closedness_residual = std::max(cert.closedness_residual, closed[s]);
  }
  cert.pass = cert.hermitian_residual <= options.hermitian_tolerance &&
              cert.closedness_residual <= options.closedness_tolerance;
  return cert;
}

KahlerCertificate check_kahler(const FilterModel& model, std::size_t sample_count,
                               std::uint64_t seed, const KahlerOptions& options) {
  if (sample_count < 1) throw DomainError("check_kahler needs at least one sample");
  const auto points = sample_points(model, options.domain, sample_count, seed);
  const double d_bound = model.has_fi() ? options.domain.d_max : 0.0;
  const std::size_t r_max =
      truncation_for(options.domain.pole_radius, model.p() + model.q(), d_bound);
  KahlerProbe probe;
  probe.holomorphic_block = [&model](const ParamPoint& p) {
    return holomorphic_metric_block(model, p);
  };
  probe.hermitian_block = [&model, r_max](const ParamPoint& p) {
    return metric_series_matrix(model.at(p), r_max);
  };
  return certify_kahler(probe, points, options);
}

}  // namespace kfp

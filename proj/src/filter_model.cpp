#include "kfp/filter_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kfp/errors.hpp"
#include "kfp/special.hpp"

namespace kfp {

namespace {

std::string format_complex(Complex z) {
  std::ostringstream out;
  out.precision(17);
  out << "(" << z.real() << ", " << z.imag() << ")";
  return out.str();
}

/// Multiplies by prod_j (1 - mu_j x) and divides by prod_i (1 - lambda_i x),
/// in place, on a truncated power series in x = 1/z.
void apply_arma(std::vector<Complex>& series, const FilterModel& model) {
  for (const Complex mu : model.roots()) {
    for (std::size_t r = series.size(); r-- > 1;) series[r] -= mu * series[r - 1];
  }
  for (const Complex lambda : model.poles()) {
    for (std::size_t r = 1; r < series.size(); ++r) series[r] += lambda * series[r - 1];
  }
}

/// Coefficients of (1 - x)^d up to x^r_max.
std::vector<Complex> fractional_series(Complex d, std::size_t r_max) {
  std::vector<Complex> c(r_max + 1);
  c[0] = 1.0;
  for (std::size_t r = 1; r <= r_max; ++r) {
    c[r] = c[r - 1] * (static_cast<double>(r - 1) - d) / static_cast<double>(r);
  }
  return c;
}

/// d/dd of the coefficients of (1 - x)^d.
std::vector<Complex> fractional_series_derivative(Complex d, std::size_t r_max) {
  std::vector<Complex> c(r_max + 1);
  std::vector<Complex> e(r_max + 1);
  c[0] = 1.0;
  e[0] = 0.0;
  for (std::size_t r = 1; r <= r_max; ++r) {
    const double rr = static_cast<double>(r);
    c[r] = c[r - 1] * (static_cast<double>(r - 1) - d) / rr;
    e[r] = (e[r - 1] * (static_cast<double>(r - 1) - d) - c[r - 1]) / rr;
  }
  return e;
}

void require_positive_order(std::size_t r_max) {
  if (r_max < 1) throw DomainError("series truncation r_max must be at least 1");
}

}  // namespace

FilterModel::FilterModel(bool has_fi, Complex d, std::vector<Complex> poles,
                         std::vector<Complex> roots, double gain)
    : has_fi_(has_fi), d_(d), poles_(std::move(poles)), roots_(std::move(roots)), gain_(gain) {
  validate();
}

FilterModel FilterModel::arma(std::vector<Complex> poles, std::vector<Complex> roots,
                              double gain) {
  return FilterModel(false, 0.0, std::move(poles), std::move(roots), gain);
}

FilterModel FilterModel::arfima(Complex d, std::vector<Complex> poles, std::vector<Complex> roots,
                                double gain) {
  return FilterModel(true, d, std::move(poles), std::move(roots), gain);
}

void FilterModel::validate() const {
  if (!(gain_ > 0.0) || !std::isfinite(gain_)) {
    throw DomainError("gain must be a positive finite number");
  }
  if (!std::isfinite(d_.real()) || !std::isfinite(d_.imag())) {
    throw DomainError("d must be finite");
  }
  for (std::size_t i = 0; i < poles_.size(); ++i) {
    if (!(std::abs(poles_[i]) < 1.0)) {
      throw DomainError(coordinate_name(pole_index(i)) + " = " + format_complex(poles_[i]) +
                        " is not strictly inside the unit disk");
    }
  }
  for (std::size_t j = 0; j < roots_.size(); ++j) {
    if (!(std::abs(roots_[j]) < 1.0)) {
      throw DomainError(coordinate_name(root_index(j)) + " = " + format_complex(roots_[j]) +
                        " is not strictly inside the unit disk");
    }
  }
  for (std::size_t i = 0; i < poles_.size(); ++i) {
    for (std::size_t j = 0; j < roots_.size(); ++j) {
      if (std::abs(poles_[i] - roots_[j]) <= kCancellationTolerance) {
        throw DomainError(coordinate_name(pole_index(i)) + " cancels " +
                          coordinate_name(root_index(j)) + "; the model is not minimal");
      }
    }
    for (std::size_t k = i + 1; k < poles_.size(); ++k) {
      if (std::abs(poles_[i] - poles_[k]) <= kCancellationTolerance) {
        throw DomainError(coordinate_name(pole_index(i)) + " coincides with " +
                          coordinate_name(pole_index(k)));
      }
    }
  }
  for (std::size_t j = 0; j < roots_.size(); ++j) {
    for (std::size_t l = j + 1; l < roots_.size(); ++l) {
      if (std::abs(roots_[j] - roots_[l]) <= kCancellationTolerance) {
        throw DomainError(coordinate_name(root_index(j)) + " coincides with " +
                          coordinate_name(root_index(l)));
      }
    }
  }
}

std::string FilterModel::coordinate_name(std::size_t index) const {
  std::size_t offset = 0;
  if (has_fi_) {
    if (index == 0) return "d";
    offset = 1;
  }
  if (index < offset + poles_.size()) return "pole[" + std::to_string(index - offset) + "]";
  offset += poles_.size();
  if (index < offset + roots_.size()) return "root[" + std::to_string(index - offset) + "]";
  return "coordinate[" + std::to_string(index) + "]";
}

ParamPoint FilterModel::point() const {
  CVector coords(static_cast<Eigen::Index>(dimension()));
  Eigen::Index k = 0;
  if (has_fi_) coords[k++] = d_;
  for (const Complex lambda : poles_) coords[k++] = lambda;
  for (const Complex mu : roots_) coords[k++] = mu;
  return ParamPoint(std::move(coords));
}

FilterModel FilterModel::at(const ParamPoint& point) const {
  if (static_cast<std::size_t>(point.size()) != dimension()) {
    throw DomainError("point has " + std::to_string(point.size()) + " coordinates, model needs " +
                      std::to_string(dimension()));
  }
  Eigen::Index k = 0;
  Complex d = 0.0;
  if (has_fi_) d = point[k++];
  std::vector<Complex> poles(poles_.size());
  for (auto& lambda : poles) lambda = point[k++];
  std::vector<Complex> roots(roots_.size());
  for (auto& mu : roots) mu = point[k++];
  return FilterModel(has_fi_, d, std::move(poles), std::move(roots), gain_);
}

double FilterModel::spectral_radius() const {
  double rho = 0.0;
  for (const Complex lambda : poles_) rho = std::max(rho, std::abs(lambda));
  for (const Complex mu : roots_) rho = std::max(rho, std::abs(mu));
  return rho;
}

Complex FilterModel::transfer_function(Complex z) const {
  const Complex x = 1.0 / z;
  Complex h = gain_;
  for (const Complex mu : roots_) h *= 1.0 - mu * x;
  for (const Complex lambda : poles_) h /= 1.0 - lambda * x;
  if (has_fi_ && d_ != Complex(0.0, 0.0)) h *= std::exp(d_ * std::log(1.0 - x));
  return h;
}

std::size_t default_truncation(const FilterModel& model, const TruncationPolicy& policy) {
  return truncation_for(model.spectral_radius(), model.p() + model.q(), std::abs(model.d()),
                        policy);
}

std::size_t truncation_for(double rho, int order, double dmod, const TruncationPolicy& policy) {
  const double m = static_cast<double>(order);
  if (m == 0.0 || rho == 0.0) return 1;
  if (!(rho < 1.0)) throw DomainError("spectral radius must be below 1");

  const double tol = policy.tolerance;
  double rho_r = rho;  // rho^R
  for (std::size_t r = 1; r <= policy.cap; ++r, rho_r *= rho) {
    const double next = static_cast<double>(r + 1);
    const double potential = (m * m * rho_r * rho_r * rho * rho + 2.0 * dmod * m * rho_r * rho) /
                             (next * next * (1.0 - rho));
    const double metric = rho_r * rho_r / (1.0 - rho * rho);
    const double mixed = (dmod + m + 1.0) * rho_r / (next * (1.0 - rho));
    if (potential <= tol && metric <= tol && mixed <= tol) return r;
  }
  std::ostringstream msg;
  msg << "truncation cap of " << policy.cap << " terms reached (spectral radius " << rho
      << "); achieved bound " << (rho_r / (1.0 - rho));
  throw PrecisionError(msg.str());
}

double cepstrum_tail_bound(const FilterModel& model, std::size_t r_max) {
  const double rho = model.spectral_radius();
  const double m = static_cast<double>(model.p() + model.q());
  const double dmod = std::abs(model.d());
  double bound = dmod * dmod * special::inverse_square_tail(r_max);
  if (m > 0.0 && rho > 0.0) {
    const double next = static_cast<double>(r_max + 1);
    const double rho_next = std::pow(rho, next);
    bound += (m * m * rho_next * rho_next + 2.0 * dmod * m * rho_next) /
             (next * next * (1.0 - rho));
  }
  return bound;
}

CepstrumSeries cepstrum_coeffs(const FilterModel& model, std::size_t r_max) {
  require_positive_order(r_max);
  CepstrumSeries out;
  out.coeffs.resize(r_max);
  out.truncation = r_max;

  std::vector<Complex> pole_pow(model.poles().begin(), model.poles().end());
  std::vector<Complex> root_pow(model.roots().begin(), model.roots().end());
  const Complex d = model.d();
  for (std::size_t r = 1; r <= r_max; ++r) {
    Complex s = 0.0;
    for (std::size_t i = 0; i < pole_pow.size(); ++i) {
      s += pole_pow[i];
      pole_pow[i] *= model.poles()[i];
    }
    for (std::size_t j = 0; j < root_pow.size(); ++j) {
      s -= root_pow[j];
      root_pow[j] *= model.roots()[j];
    }
    out.coeffs[r - 1] = (s - d) / static_cast<double>(r);
  }
  out.tail_bound = cepstrum_tail_bound(model, r_max);
  return out;
}

CepstrumSeries cepstrum_coeffs(const FilterModel& model) {
  return cepstrum_coeffs(model, default_truncation(model));
}

ImpulseSeries impulse_response(const FilterModel& model, std::size_t r_max) {
  std::vector<Complex> h;
  if (model.has_fi()) {
    h = fractional_series(model.d(), r_max);
  } else {
    h.assign(r_max + 1, Complex(0.0, 0.0));
    h[0] = 1.0;
  }
  apply_arma(h, model);
  for (auto& c : h) c *= model.gain();
  return ImpulseSeries{std::move(h)};
}

std::vector<Complex> holomorphic_param_derivative(const FilterModel& model, SeriesKind which,
                                                  std::size_t coord_index, std::size_t r_max) {
  if (coord_index >= model.dimension()) {
    throw DomainError("coordinate index " + std::to_string(coord_index) +
                      " out of range for a model of dimension " +
                      std::to_string(model.dimension()));
  }
  require_positive_order(r_max);
  const bool is_d = model.has_fi() && coord_index == 0;
  const bool is_pole = !is_d && coord_index < model.pole_index(model.poles().size());
  const Complex base = is_d ? Complex(0.0, 0.0)
                       : is_pole
                           ? model.poles()[coord_index - model.pole_index(0)]
                           : model.roots()[coord_index - model.root_index(0)];

  if (which == SeriesKind::cepstrum) {
    std::vector<Complex> out(r_max);
    if (is_d) {
      for (std::size_t r = 1; r <= r_max; ++r) out[r - 1] = -1.0 / static_cast<double>(r);
      return out;
    }
    const double sign = is_pole ? 1.0 : -1.0;
    Complex power = 1.0;
    for (std::size_t r = 1; r <= r_max; ++r) {
      out[r - 1] = sign * power;
      power *= base;
    }
    return out;
  }

  if (is_d) {
    auto e = fractional_series_derivative(model.d(), r_max);
    apply_arma(e, model);
    for (auto& c : e) c *= model.gain();
    return e;
  }
  // d/dlambda h = h * x / (1 - lambda x);  d/dmu h = -h * x / (1 - mu x).
  const auto h = impulse_response(model, r_max).coeffs;
  const double sign = is_pole ? 1.0 : -1.0;
  std::vector<Complex> out(r_max + 1);
  out[0] = 0.0;
  for (std::size_t r = 1; r <= r_max; ++r) out[r] = sign * h[r - 1] + base * out[r - 1];
  return out;
}

}  // namespace kfp

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kfp/types.hpp"

namespace kfp {

/// ARFIMA(p, d, q) transfer function on the fixed-gain submanifold
///
///   h(z) = gain * prod_j (1 - mu_j / z) / prod_i (1 - lambda_i / z) * (1 - 1/z)^d.
///
/// Models built with `arma` have no fractional coordinate; `arfima` models
/// always carry one (possibly d = 0). The gain is inert metadata and is never
/// differentiated.
class FilterModel {
 public:
  /// Cancellation / coincidence tolerance for pole and root pairs.
  static constexpr double kCancellationTolerance = 1e-12;

  static FilterModel arma(std::vector<Complex> poles, std::vector<Complex> roots,
                          double gain = 1.0);
  static FilterModel arfima(Complex d, std::vector<Complex> poles, std::vector<Complex> roots,
                            double gain = 1.0);

  int p() const { return static_cast<int>(poles_.size()); }
  int q() const { return static_cast<int>(roots_.size()); }
  bool has_fi() const { return has_fi_; }
  Complex d() const { return d_; }
  double gain() const { return gain_; }
  std::span<const Complex> poles() const { return poles_; }
  std::span<const Complex> roots() const { return roots_; }

  /// Complex dimension n of the parameter manifold.
  std::size_t dimension() const { return poles_.size() + roots_.size() + (has_fi_ ? 1 : 0); }

  /// Coordinate layout: d first (when present), then poles, then roots.
  std::size_t pole_index(std::size_t i) const { return (has_fi_ ? 1 : 0) + i; }
  std::size_t root_index(std::size_t j) const { return (has_fi_ ? 1 : 0) + poles_.size() + j; }

  /// Human-readable coordinate label, e.g. "d", "pole[1]", "root[0]".
  std::string coordinate_name(std::size_t index) const;

  ParamPoint point() const;

  /// Same structure and gain, coordinates replaced by `point`. Re-validates.
  FilterModel at(const ParamPoint& point) const;

  /// Largest pole/root modulus (0 for a pure FI or constant filter).
  double spectral_radius() const;

  /// h(z) evaluated from the product form; requires |z| > spectral_radius()
  /// and z != 1 when d != 0.
  Complex transfer_function(Complex z) const;

  bool operator==(const FilterModel&) const = default;

 private:
  FilterModel(bool has_fi, Complex d, std::vector<Complex> poles, std::vector<Complex> roots,
              double gain);
  void validate() const;

  bool has_fi_ = false;
  Complex d_{0.0, 0.0};
  std::vector<Complex> poles_;
  std::vector<Complex> roots_;
  double gain_ = 1.0;
};

/// Complex cepstrum coefficients eta_1..eta_R of log h.
///
/// Sign convention (used throughout): with
///   log h = log h0 + d log(1 - 1/z) + sum_j log(1 - mu_j/z) - sum_i log(1 - lambda_i/z)
/// the coefficient of z^{-r} is eta_r = (sum_i lambda_i^r - sum_j mu_j^r - d) / r.
struct CepstrumSeries {
  std::vector<Complex> coeffs;  // coeffs[r - 1] = eta_r
  std::size_t truncation = 0;
  /// Upper bound on the omitted mass sum_{r > R} |eta_r|^2.
  double tail_bound = 0.0;

  Complex eta(std::size_t r) const { return coeffs.at(r - 1); }
};

/// Impulse response h_0..h_R.
struct ImpulseSeries {
  std::vector<Complex> coeffs;
};

enum class SeriesKind { cepstrum, impulse };

struct TruncationPolicy {
  double tolerance = 1e-10;
  std::size_t cap = 1'000'000;
};

/// Smallest R for which the non-analytic part of every series-defined
/// geometric quantity (potential remainder, off-diagonal metric tails) is
/// below `policy.tolerance`. The d-d metric entry and the |d|^2 part of the
/// potential have exact tails and do not drive R. Throws PrecisionError
/// when R would exceed the cap.
std::size_t default_truncation(const FilterModel& model, const TruncationPolicy& policy = {});

/// Same rule from the bounding quantities directly: spectral radius, p + q
/// and |d|. Covers every model whose quantities are no larger.
std::size_t truncation_for(double spectral_radius, int order, double d_modulus,
                           const TruncationPolicy& policy = {});

/// Bound on sum_{r>R} |eta_r|^2 using |eta_r| <= (|d| + (p+q) rho^r) / r.
double cepstrum_tail_bound(const FilterModel& model, std::size_t r_max);

CepstrumSeries cepstrum_coeffs(const FilterModel& model, std::size_t r_max);
CepstrumSeries cepstrum_coeffs(const FilterModel& model);

ImpulseSeries impulse_response(const FilterModel& model, std::size_t r_max);

/// Exact holomorphic derivative with respect to coordinate `coord_index`.
/// For the cepstrum the result is d eta_r for r = 1..r_max; for the impulse
/// response it is d h_r for r = 0..r_max.
std::vector<Complex> holomorphic_param_derivative(const FilterModel& model, SeriesKind which,
                                                  std::size_t coord_index, std::size_t r_max);

}  // namespace kfp

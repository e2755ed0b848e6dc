#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "kfp/field.hpp"
#include "kfp/filter_model.hpp"
#include "kfp/sampling.hpp"
#include "kfp/types.hpp"

namespace kfp {

/// Hermitian metric g(i, j) = g_{i jbar} with its inverse and determinant.
///
/// Index convention: the contravariant metric g^{i jbar} is g_inv(j, i), so
/// that g^{i jbar} g_{i jbar} = tr(g_inv g) = n.
struct HermitianMetric {
  CMatrix g;
  CMatrix g_inv;
  double det = 0.0;
  double log_det = 0.0;
  double condition_estimate = 1.0;

  Eigen::Index dimension() const { return g.rows(); }
};

/// Hermitizes, factors and inverts `g`. Throws GeometryError when `g` is not
/// Hermitian to 1e-12 (relative) or not positive definite.
HermitianMetric make_hermitian_metric(const CMatrix& g);

/// Kahler potential K = sum_{r>=1} |eta_r|^2 from the truncated cepstrum.
/// The |d|^2 sum_{r>R} 1/r^2 part of the tail is added exactly; the rest of
/// the tail is below the truncation tolerance.
double kahler_potential(const FilterModel& model, const ParamPoint& point);
double kahler_potential(const FilterModel& model);
double kahler_potential_series(const FilterModel& model, std::size_t r_max);

/// K in closed form through dilogarithms of poles, roots and their products.
double kahler_potential_closed_form(const FilterModel& model);

/// Analytic bound (|d| + p + q)^2 pi^2 / 6.
double kahler_potential_bound(const FilterModel& model);

/// g_{i jbar} = sum_r d_i eta_r conj(d_j eta_r), truncated at `r_max`
/// (default_truncation when omitted) with the exact d-d tail.
HermitianMetric metric_series(const FilterModel& model, const ParamPoint& point,
                              std::optional<std::size_t> r_max = std::nullopt);
HermitianMetric metric_series(const FilterModel& model);
CMatrix metric_series_matrix(const FilterModel& model, std::size_t r_max);

/// Closed-form ARFIMA metric (d row/column first, then poles, then roots).
HermitianMetric metric_closed_form(const FilterModel& model, const ParamPoint& point);
HermitianMetric metric_closed_form(const FilterModel& model);
CMatrix metric_closed_form_matrix(const FilterModel& model);

/// Gamma_{ij,kbar} = d_i g_{j kbar}.
class ConnectionTensor {
 public:
  explicit ConnectionTensor(std::size_t n) : n_(n), data_(n * n * n, Complex(0.0, 0.0)) {}
  std::size_t dimension() const { return n_; }
  Complex operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * n_ + j) * n_ + k];
  }
  Complex& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * n_ + j) * n_ + k];
  }

 private:
  std::size_t n_;
  std::vector<Complex> data_;
};

/// Analytic connection from the closed-form metric entries. Each entry
/// g_{j kbar} depends holomorphically on xi_j only, so Gamma_{ij,kbar}
/// vanishes unless i == j.
ConnectionTensor connection(const FilterModel& model, const ParamPoint& point);

enum class RicciStencil { bilinear, richardson };

struct RicciOptions {
  RicciStencil stencil = RicciStencil::bilinear;
  double rel_step = 1e-4;
  /// Results at points with a larger metric condition number carry a
  /// precision warning.
  double condition_warning = 1e8;
};

struct RicciResult {
  CMatrix r;
  bool precision_warning = false;
};

/// R_{i jbar} = -d_i d_jbar log det g by second Wirtinger differences of the
/// closed-form metric determinant.
RicciResult ricci(const FilterModel& model, const ParamPoint& point,
                  const RicciOptions& options = {});

/// -d_i d_jbar log s, where s = g_dd - g_{d .} A^{-1} g_{. d} is the Schur
/// complement of the ARMA block A. The full Ricci tensor of an ARFIMA model
/// is the ARMA Ricci tensor plus this term on the ARMA block.
CMatrix ricci_mixing_correction(const FilterModel& model, const ParamPoint& point,
                                const RicciOptions& options = {});

/// Laplace-Beltrami operator 2 g^{i jbar} d_i d_jbar f. Throws
/// ConsistencyError when the contraction has an imaginary residue above
/// 1e-10 relative to its terms.
double laplace_beltrami(const HermitianMetric& metric, const FieldJet& jet);
double laplace_beltrami(const HermitianMetric& metric, const ScalarField& field,
                        const FilterModel& at);

/// Holomorphic-holomorphic block g_{ij} = (1/2 pi i) \oint d_i log h d_j log h dz/z
/// by trapezoidal quadrature on |z| = radius, with d_i log h from
/// differences of the transfer function.
CMatrix holomorphic_metric_block(const FilterModel& model, const ParamPoint& point,
                                 double radius = 1.5, int nodes = 256);

struct KahlerCertificate {
  double hermitian_residual = 0.0;
  double closedness_residual = 0.0;
  std::size_t sampled_points = 0;
  bool pass = false;
};

struct KahlerOptions {
  double hermitian_tolerance = 1e-8;
  double closedness_tolerance = 1e-6;
  double fd_rel_step = 1e-5;
  SamplingDomain domain{};
};

/// Metric blocks probed by a Kahler certificate.
struct KahlerProbe {
  std::function<CMatrix(const ParamPoint&)> holomorphic_block;
  std::function<CMatrix(const ParamPoint&)> hermitian_block;
};

/// Evaluates both residuals of `probe` at `points`.
KahlerCertificate certify_kahler(const KahlerProbe& probe, const std::vector<ParamPoint>& points,
                                 const KahlerOptions& options = {});

/// Samples the model's domain and certifies its series metric.
KahlerCertificate check_kahler(const FilterModel& model, std::size_t sample_count,
                               std::uint64_t seed, const KahlerOptions& options = {});

}  // namespace kfp

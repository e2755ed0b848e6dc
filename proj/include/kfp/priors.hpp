#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kfp/field.hpp"
#include "kfp/filter_model.hpp"
#include "kfp/geometry.hpp"
#include "kfp/sampling.hpp"

namespace kfp {

// ---------------------------------------------------------------------------
// Ansatz building blocks. A superharmonic prior function is assembled as
// psi = Psi(u* - kappa) with kappa upper-bounded and subharmonic and
// Psi' > 0, Psi'' <= 0 on tau = u* - kappa > 0.
// ---------------------------------------------------------------------------

enum class KappaKind {
  potential,         // kappa_1 = K
  weighted_impulse,  // kappa_2 = sum_{r>=1} a_r |h_r|^2, a_r = ratio^r
  weighted_coords,   // kappa_3 = sum_i b_i |xi_i|^2
};

struct KappaAnsatz {
  KappaKind kind = KappaKind::potential;
  /// b_i for weighted_coords, one per coordinate; unused otherwise.
  std::vector<double> weights;
  /// a_r = weight_ratio^r for weighted_impulse; must lie in (0, 1).
  double weight_ratio = 0.5;
  /// Strict upper bound of kappa over the configured domain.
  double u_star = 0.0;

  /// Ansatz for `structure` with u* = margin * (analytic sup of kappa over
  /// `domain`). Empty `weights` for weighted_coords means all ones.
  static KappaAnsatz for_domain(KappaKind kind, const FilterModel& structure,
                                const SamplingDomain& domain, double margin = 1.05,
                                std::vector<double> weights = {}, double weight_ratio = 0.5);
};

/// Analytic supremum of kappa over the domain (before the u* margin).
double kappa_upper_bound(const KappaAnsatz& ansatz, const FilterModel& structure,
                         const SamplingDomain& domain);

enum class PsiKind {
  power,      // Psi_1(tau) = tau^a
  log_power,  // Psi_2(tau) = log(1 + tau^a)
};

struct PsiAnsatz {
  PsiKind kind = PsiKind::power;
  double exponent = 1.0;

  /// Throws ConfigurationError unless 0 < a <= 1 (0 < a < 1 when kappa is
  /// only harmonic).
  void validate(bool kappa_harmonic = false) const;

  double value(double tau) const;
  double d1(double tau) const;
  double d2(double tau) const;
};

/// kappa, d_i kappa and d_i d_jbar kappa from holomorphic building blocks.
FieldJet kappa_value_and_derivatives(const KappaAnsatz& ansatz, const FilterModel& model,
                                     const ParamPoint& point);

/// Psi(u* - kappa). Throws DomainError when tau <= 0.
double psi_value(const PsiAnsatz& psi, const KappaAnsatz& kappa, const FilterModel& model,
                 const ParamPoint& point);

struct LaplacianOptions {
  bool fd_cross_check = false;
  double consistency_tolerance = 1e-4;
  /// Richardson-extrapolated stencil step; psi can be large (u* grows
  /// with the kappa bound), so plain second differences lose digits.
  double fd_rel_step = 2e-3;
};

/// Delta psi = 2 Psi'' |d kappa|_g^2 - Psi' Delta kappa, with
/// |d kappa|_g^2 = g^{i jbar} d_i kappa d_jbar kappa. With
/// `fd_cross_check`, compares against a finite-difference Laplacian of the
/// composed field and throws ConsistencyError on disagreement.
double laplacian_of_psi(const PsiAnsatz& psi, const KappaAnsatz& kappa, const FilterModel& model,
                        const ParamPoint& point, const LaplacianOptions& options = {});

ScalarField kappa_field(const KappaAnsatz& kappa);
ScalarField psi_field(const PsiAnsatz& psi, const KappaAnsatz& kappa);

/// The Kahler potential as a field (subharmonic; negative control).
ScalarField potential_field();

/// (1 - |x1|^2)(1 - x1 conj x2)(1 - x2 conj x1)(1 - |x2|^2) on the pole
/// coordinates of an AR(2) model.
ScalarField kahler_ar2_field();

/// prod_{i<j} (1 - x_i x_j) over the poles. Defined on the real-AR manifold
/// (real poles or conjugate pairs); throws DomainError off that slice.
/// Evaluation only: no superharmonicity claim under the complex metric.
double tanaka_arp_value(const FilterModel& model);

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

struct CatalogOptions {
  SamplingDomain domain{};
  double u_star_margin = 1.05;
  double kappa2_ratio = 0.5;
};

struct CatalogEntry {
  std::string id;
  ScalarField field;
  bool evaluation_only = false;
};

/// Resolves identifiers such as "psi1-a0.5/kappa1", "psi2-a1/kappa3",
/// "kahler-ar2", "tanaka-arp", "potential", "exp-neg-potential", "constant".
/// Throws ParseError for unknown identifiers and ConfigurationError when the
/// identifier does not apply to `structure`.
CatalogEntry make_prior(std::string_view id, const FilterModel& structure,
                        const CatalogOptions& options = {});

/// Every (Psi, kappa) combination for exponents {0.25, 0.5, 1}.
std::vector<std::string> ansatz_catalog_ids();

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

enum class Verdict { superharmonic, indeterminate, violated };

std::string_view to_string(Verdict verdict);

struct CertifyOptions {
  SamplingDomain domain{};
  /// Laplacians within +-tolerance count as zero.
  double tolerance = 1e-8;
  /// "violated" needs max Laplacian above violation_factor * tolerance.
  double violation_factor = 10.0;
  bool record_points = false;
};

struct PointLaplacian {
  ParamPoint point;
  double laplacian = 0.0;
};

/// Sampled certificate, not a proof.
///   superharmonic: max <= tol and some Laplacian < -tol
///   violated:      max > violation_factor * tol
///   indeterminate: otherwise (including everywhere-harmonic fields)
struct SuperharmonicityReport {
  std::string field_id;
  double max_laplacian = 0.0;
  double min_laplacian = 0.0;
  ParamPoint worst_point;
  std::size_t points_checked = 0;
  Verdict verdict = Verdict::indeterminate;
  double tolerance = 0.0;
  std::vector<PointLaplacian> points;  // filled when record_points
};

SuperharmonicityReport certify_superharmonic(const ScalarField& field, const FilterModel& model,
                                             std::size_t sample_count, std::uint64_t seed,
                                             const CertifyOptions& options = {});

SuperharmonicityReport certify_points(const ScalarField& field, const FilterModel& model,
                                      const std::vector<ParamPoint>& points,
                                      const CertifyOptions& options = {});

/// Certificate for sqrt(psi).
SuperharmonicityReport sqrt_psi_certificate(const ScalarField& field, const FilterModel& model,
                                            std::size_t sample_count, std::uint64_t seed,
                                            const CertifyOptions& options = {});

// ---------------------------------------------------------------------------
// Jeffreys prior and the risk formula
// ---------------------------------------------------------------------------

/// Unnormalized Jeffreys density det(g_{i jbar}).
double jeffreys_density(const FilterModel& model, const ParamPoint& point);

struct PriorValue {
  double jeffreys = 0.0;
  double psi = 0.0;
  double shrinkage = 0.0;  // psi * jeffreys
};

PriorValue prior_value(const ScalarField& psi, const FilterModel& model, const ParamPoint& point);

/// Leading-order Jeffreys-minus-shrinkage KL risk difference at sample size N:
///   (1/N^2) [ g^{i jbar} d_i log psi d_jbar log psi - Delta psi / psi ]
/// where the first term is the real-coordinate (1/2)|grad log psi|^2
/// written in Wirtinger form.
double risk_improvement(const ScalarField& psi, const FilterModel& model, const ParamPoint& point,
                        std::uint64_t sample_size);

}  // namespace kfp

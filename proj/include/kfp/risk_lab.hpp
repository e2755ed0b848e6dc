#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kfp/priors.hpp"

namespace kfp {

enum class ModelFamily { ar1, ar2 };

std::string_view to_string(ModelFamily family);

/// Gaussian AR experiment with unit innovation variance. AR coefficients
/// follow x_t = phi_1 x_{t-1} + ... + phi_p x_{t-p} + e_t.
struct ExperimentConfig {
  ModelFamily family = ModelFamily::ar1;
  std::vector<double> true_params{0.5};
  std::vector<std::uint64_t> sample_sizes{50};
  std::size_t replications = 200;
  /// Midpoint nodes per dimension.
  std::size_t grid = 401;
  std::vector<std::string> prior_ids{"jeffreys"};
  std::uint64_t seed = 1;
  /// Grid nodes keep every pole modulus <= 1 - boundary_margin.
  double boundary_margin = 0.02;
  double kl_tolerance = 1e-10;
  double kappa2_ratio = 0.5;

  /// Throws DomainError / ConfigurationError on invalid settings.
  void validate() const;
  std::size_t order() const { return family == ModelFamily::ar1 ? 1 : 2; }
};

/// Poles of 1 - phi_1 z^-1 - ... - phi_p z^-p for p in {1, 2}.
std::vector<Complex> ar_poles(const std::vector<double>& phi);
bool is_stationary(const std::vector<double>& phi);

/// Stationary Gaussian AR sample of length n, deterministic in seed.
std::vector<double> simulate_series(const std::vector<double>& phi, std::size_t n,
                                    std::uint64_t seed);

/// Exact stationary Gaussian log-likelihood (unit innovation variance).
double ar_log_likelihood(const std::vector<double>& phi, const std::vector<double>& x);

/// Unnormalized Jeffreys density det g at the pole image of phi.
double ar_jeffreys_density(const std::vector<double>& phi);

/// Prior evaluated on the coefficient grid. Node weights are the midpoint
/// cell volume times the prior density in coefficient coordinates, i.e. the
/// pole-coordinate density divided by |d phi / d poles|.
class PriorGrid {
 public:
  PriorGrid(const ExperimentConfig& config, const std::string& prior_id);

  const std::string& prior_id() const { return prior_id_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<std::vector<double>>& nodes() const { return nodes_; }
  const std::vector<double>& log_weights() const { return log_weights_; }

 private:
  std::string prior_id_;
  std::vector<std::vector<double>> nodes_;
  std::vector<double> log_weights_;
};

/// Gaussian mixture sum_k w_k N(m_k, 1) over the next observation.
class PredictiveDensity {
 public:
  PredictiveDensity(std::vector<double> weights, std::vector<double> means);

  double pdf(double y) const;
  double log_pdf(double y) const;
  double mean() const;
  double variance() const;
  std::size_t components() const { return means_.size(); }

 private:
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<double> means_;
};

PredictiveDensity predictive_density(const std::vector<double>& data, const PriorGrid& grid);
PredictiveDensity predictive_density(const std::vector<double>& data, const std::string& prior_id,
                                     const ExperimentConfig& config);

/// N(mean_of(phi, data), 1): the plug-in predictive.
double ar_conditional_mean(const std::vector<double>& phi, const std::vector<double>& data);

/// KL(N(true_mean, 1) || predictive), adaptive Gauss-Kronrod over
/// +-8 predictive standard deviations.
double kl_divergence(double true_mean, const PredictiveDensity& predictive, double tolerance);

struct RiskEstimate {
  std::string prior_id;
  std::uint64_t sample_size = 0;
  double mean_kl_risk = 0.0;
  double std_error = 0.0;
  std::size_t replications_used = 0;
};

struct RiskDifference {
  std::uint64_t sample_size = 0;
  double mean = 0.0;  // baseline risk - other risk
  double std_error = 0.0;
};

struct RiskRun {
  ExperimentConfig config;
  std::vector<RiskEstimate> estimates;  // sample-size major, prior minor
  /// kl[size_index][prior_index][replication]
  std::vector<std::vector<std::vector<double>>> kl;

  const RiskEstimate& estimate(std::size_t size_index, std::size_t prior_index) const;
  /// Paired (common random numbers) difference baseline - other.
  RiskDifference difference(std::size_t size_index, std::size_t baseline_prior,
                            std::size_t other_prior) const;
};

RiskRun kl_risk(const ExperimentConfig& config);

}  // namespace kfp

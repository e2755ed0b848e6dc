#include "kfp/risk_lab.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kfp/errors.hpp"

namespace kfp {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;
// Mixture components lighter than this fraction of the heaviest are dropped.
constexpr double kPruneLogRatio = -41.44653167389282;  // log(1e-18)

std::uint64_t replication_seed(std::uint64_t seed, std::size_t replication) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replication),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(replication) >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

/// Stationary covariance of (x_1, ..., x_p) for p in {1, 2}.
std::vector<double> initial_covariance(const std::vector<double>& phi) {
  if (phi.size() == 1) return {1.0 / (1.0 - phi[0] * phi[0])};
  const double a = phi[0];
  const double b = phi[1];
  const double gamma0 = (1.0 - b) / ((1.0 + b) * ((1.0 - b) * (1.0 - b) - a * a));
  const double gamma1 = a * gamma0 / (1.0 - b);
  return {gamma0, gamma1};
}

void check_order(const std::vector<double>& phi) {
  if (phi.size() != 1 && phi.size() != 2) {
    throw ConfigurationError("only AR(1) and AR(2) are supported, got order " +
                             std::to_string(phi.size()));
  }
}

void check_stationary(const std::vector<double>& phi) {
  check_order(phi);
  if (!is_stationary(phi)) {
    std::ostringstream msg;
    msg << "AR coefficients (";
    for (std::size_t i = 0; i < phi.size(); ++i) msg << (i ? ", " : "") << phi[i];
    msg << ") are not stationary";
    throw DomainError(msg.str());
  }
}

/// Cross products S(i, j) = sum_{t=p}^{n-1} x_{t-i} x_{t-j}, i, j in [0, p].
struct LagStatistics {
  std::size_t p = 0;
  std::array<std::array<double, 3>, 3> s{};
  std::array<double, 2> head{};

  LagStatistics(std::size_t order, const std::vector<double>& x) : p(order) {
    for (std::size_t t = p; t < x.size(); ++t) {
      for (std::size_t i = 0; i <= p; ++i) {
        for (std::size_t j = 0; j <= p; ++j) s[i][j] += x[t - i] * x[t - j];
      }
    }
    for (std::size_t i = 0; i < p; ++i) head[i] = x[i];
  }

  double log_likelihood(const std::vector<double>& phi, std::size_t n) const {
    // Residual sum of squares with coefficient vector v = (1, -phi).
    std::array<double, 3> v{1.0, 0.0, 0.0};
    for (std::size_t i = 0; i < p; ++i) v[i + 1] = -phi[i];
    double rss = 0.0;
    for (std::size_t i = 0; i <= p; ++i) {
      for (std::size_t j = 0; j <= p; ++j) rss += v[i] * v[j] * s[i][j];
    }
    const auto cov = initial_covariance(phi);
    double log_det = 0.0;
    double quad = 0.0;
    if (p == 1) {
      log_det = std::log(cov[0]);
      quad = head[0] * head[0] / cov[0];
    } else {
      const double det = cov[0] * cov[0] - cov[1] * cov[1];
      log_det = std::log(det);
      quad = (cov[0] * (head[0] * head[0] + head[1] * head[1]) - 2.0 * cov[1] * head[0] * head[1]) /
             det;
    }
    return -0.5 * static_cast<double>(n) * kLogTwoPi - 0.5 * log_det - 0.5 * (quad + rss);
  }
};

double prior_density_on_poles(const ScalarField* psi, bool flat, const std::vector<Complex>& poles) {
  if (flat) return 1.0;
  double jeffreys = 1.0;
  for (std::size_t i = 0; i < poles.size(); ++i) {
    jeffreys /= 1.0 - std::norm(poles[i]);
    for (std::size_t j = i + 1; j < poles.size(); ++j) {
      jeffreys *= std::norm(poles[i] - poles[j]) / std::norm(1.0 - poles[i] * std::conj(poles[j]));
    }
  }
  if (psi == nullptr) return jeffreys;
  const double value = psi->value(FilterModel::arma(poles, {}, 1.0));
  if (!(value > 0.0)) throw DomainError("prior function must be positive on the quadrature grid");
  return value * jeffreys;
}

/// |det d(phi) / d(pole coordinates)|: |lambda_1 - lambda_2| for a real pair,
/// 4 |Im lambda| for a conjugate pair (x, y) coordinates.
double coefficient_jacobian(const std::vector<Complex>& poles) {
  if (poles.size() == 1) return 1.0;
  if (poles[0].imag() != 0.0) return 4.0 * std::abs(poles[0].imag());
  return std::abs(poles[0].real() - poles[1].real());
}

}  // namespace

std::string_view to_string(ModelFamily family) {
  return family == ModelFamily::ar1 ? "AR1" : "AR2";
}

void ExperimentConfig::validate() const {
  if (true_params.size() != order()) {
    throw ConfigurationError("true_params needs " + std::to_string(order()) + " coefficient(s) for " +
                             std::string(to_string(family)));
  }
  check_stationary(true_params);
  if (!(boundary_margin > 0.0 && boundary_margin < 1.0)) {
    throw ConfigurationError("boundary_margin must lie in (0, 1)");
  }
  if (std::ranges::any_of(ar_poles(true_params),
                          [&](Complex z) { return std::abs(z) > 1.0 - boundary_margin; })) {
    throw DomainError("true_params lie outside the quadrature region");
  }
  if (sample_sizes.empty()) throw ConfigurationError("sample_sizes must not be empty");
  for (const auto n : sample_sizes) {
    if (n < 2 * order()) {
      throw ConfigurationError("sample size " + std::to_string(n) + " is too small for " +
                               std::string(to_string(family)));
    }
  }
  if (replications < 1) throw ConfigurationError("replications must be positive");
  if (grid < 2) throw ConfigurationError("grid needs at least 2 nodes per dimension");
  if (prior_ids.empty()) throw ConfigurationError("prior_ids must not be empty");
  if (!(kl_tolerance > 0.0)) throw ConfigurationError("kl_tolerance must be positive");
}

std::vector<Complex> ar_poles(const std::vector<double>& phi) {
  check_order(phi);
  if (phi.size() == 1) return {Complex(phi[0], 0.0)};
  const double disc = phi[0] * phi[0] + 4.0 * phi[1];
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    return {Complex(0.5 * (phi[0] + s), 0.0), Complex(0.5 * (phi[0] - s), 0.0)};
  }
  const double y = 0.5 * std::sqrt(-disc);
  return {Complex(0.5 * phi[0], y), Complex(0.5 * phi[0], -y)};
}

bool is_stationary(const std::vector<double>& phi) {
  for (const double c : phi) {
    if (!std::isfinite(c)) return false;
  }
  const auto poles = ar_poles(phi);
  return std::ranges::all_of(poles, [](Complex z) { return std::abs(z) < 1.0; });
}

std::vector<double> simulate_series(const std::vector<double>& phi, std::size_t n,
                                    std::uint64_t seed) {
  check_stationary(phi);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x;
  x.reserve(n);
  const auto cov = initial_covariance(phi);
  if (n == 0) return x;
  if (phi.size() == 1) {
    x.push_back(std::sqrt(cov[0]) * normal(rng));
  } else {
    const double l11 = std::sqrt(cov[0]);
    const double l21 = cov[1] / l11;
    const double l22 = std::sqrt(cov[0] - l21 * l21);
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    x.push_back(l11 * z1);
    if (n > 1) x.push_back(l21 * z1 + l22 * z2);
  }
  while (x.size() < n) x.push_back(ar_conditional_mean(phi, x) + normal(rng));
  return x;
}

double ar_log_likelihood(const std::vector<double>& phi, const std::vector<double>& x) {
  check_stationary(phi);
  if (x.size() < phi.size()) throw DomainError("series shorter than the AR order");
  return LagStatistics(phi.size(), x).log_likelihood(phi, x.size());
}

double ar_jeffreys_density(const std::vector<double>& phi) {
  check_stationary(phi);
  return prior_density_on_poles(nullptr, false, ar_poles(phi));
}

double ar_conditional_mean(const std::vector<double>& phi, const std::vector<double>& data) {
  if (data.size() < phi.size()) throw DomainError("series shorter than the AR order");
  double m = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) m += phi[i] * data[data.size() - 1 - i];
  return m;
}

// ---------------------------------------------------------------------------

PriorGrid::PriorGrid(const ExperimentConfig& config, const std::string& prior_id)
    : prior_id_(prior_id) {
  const double edge = 1.0 - config.boundary_margin;
  const bool flat = prior_id == "flat";
  std::optional<ScalarField> psi;
  if (!flat && prior_id != "jeffreys") {
    std::vector<Complex> probe(config.order(), Complex(0.0));
    if (probe.size() == 2) probe = {Complex(0.1), Complex(-0.1)};
    CatalogOptions catalog;
    catalog.domain.pole_radius = edge;
    catalog.kappa2_ratio = config.kappa2_ratio;
    psi = make_prior(prior_id, FilterModel::arma(probe, {}, 1.0), catalog).field;
  }
  const ScalarField* psi_ptr = psi ? &*psi : nullptr;

  const std::size_t m = config.grid;
  if (config.family == ModelFamily::ar1) {
    const double h = 2.0 * edge / static_cast<double>(m);
    for (std::size_t k = 0; k < m; ++k) {
      const double a = -edge + (static_cast<double>(k) + 0.5) * h;
      nodes_.push_back({a});
    }
  } else {
    const double h1 = 4.0 / static_cast<double>(m);
    const double h2 = 2.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const std::vector<double> phi{-2.0 + (static_cast<double>(i) + 0.5) * h1,
                                      -1.0 + (static_cast<double>(j) + 0.5) * h2};
        // Repeated poles have measure zero and a degenerate chart.
        if (std::abs(phi[0] * phi[0] + 4.0 * phi[1]) < 1e-12) continue;
        const auto poles = ar_poles(phi);
        if (std::ranges::all_of(poles, [&](Complex z) { return std::abs(z) <= edge; })) {
          nodes_.push_back(phi);
        }
      }
    }
  }
  log_weights_.reserve(nodes_.size());
  for (const auto& phi : nodes_) {
    const auto poles = ar_poles(phi);
    const double density = prior_density_on_poles(psi_ptr, flat, poles);
    const double jac = flat ? 1.0 : coefficient_jacobian(poles);
    log_weights_.push_back(std::log(density / jac));
  }
}

PredictiveDensity::PredictiveDensity(std::vector<double> weights, std::vector<double> means)
    : weights_(std::move(weights)), means_(std::move(means)) {
  if (weights_.size() != means_.size() || weights_.empty()) {
    throw ConsistencyError("predictive mixture needs matching, non-empty weights and means");
  }
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (!(total > 0.0)) throw PrecisionError("predictive mixture has no mass");
  log_weights_.reserve(weights_.size());
  for (auto& w : weights_) {
    w /= total;
    log_weights_.push_back(std::log(w));
  }
}

double PredictiveDensity::log_pdf(double y) const {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < means_.size(); ++k) {
    const double e = y - means_[k];
    top = std::max(top, log_weights_[k] - 0.5 * e * e);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < means_.size(); ++k) {
    const double e = y - means_[k];
    sum += std::exp(log_weights_[k] - 0.5 * e * e - top);
  }
  return top + std::log(sum) - 0.5 * kLogTwoPi;
}

double PredictiveDensity::pdf(double y) const { return std::exp(log_pdf(y)); }

double PredictiveDensity::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < means_.size(); ++k) m += weights_[k] * means_[k];
  return m;
}

double PredictiveDensity::variance() const {
  const double m = mean();
  double v = 1.0;
  for (std::size_t k = 0; k < means_.size(); ++k) v += weights_[k] * (means_[k] - m) * (means_[k] - m);
  return v;
}

PredictiveDensity predictive_density(const std::vector<double>& data, const PriorGrid& grid) {
  const std::size_t p = grid.nodes().empty() ? 1 : grid.nodes().front().size();
  if (data.size() < 2 * p) throw DomainError("series too short for the predictive density");
  const LagStatistics stats(p, data);
  std::vector<double> log_post(grid.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    log_post[k] = grid.log_weights()[k] + stats.log_likelihood(grid.nodes()[k], data.size());
    top = std::max(top, log_post[k]);
  }
  if (!std::isfinite(top)) {
    throw PrecisionError("posterior mass underflows on the quadrature grid; refine the grid");
  }
  std::vector<double> weights;
  std::vector<double> means;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double rel = log_post[k] - top;
    if (rel < kPruneLogRatio) continue;
    weights.push_back(std::exp(rel));
    means.push_back(ar_conditional_mean(grid.nodes()[k], data));
  }
  return PredictiveDensity(std::move(weights), std::move(means));
}

PredictiveDensity predictive_density(const std::vector<double>& data, const std::string& prior_id,
                                     const ExperimentConfig& config) {
  return predictive_density(data, PriorGrid(config, prior_id));
}

double kl_divergence(double true_mean, const PredictiveDensity& predictive, double tolerance) {
  using boost::math::quadrature::gauss_kronrod;
  const double half_width = 8.0 * std::sqrt(predictive.variance());
  const auto integrand = [&](double y) {
    const double e = y - true_mean;
    const double log_p = -0.5 * e * e - 0.5 * kLogTwoPi;
    return std::exp(log_p) * (log_p - predictive.log_pdf(y));
  };
  double error = 0.0;
  const double value = gauss_kronrod<double, 15>::integrate(
      integrand, true_mean - half_width, true_mean + half_width, 20, tolerance, &error);
  return value;
}

// ---------------------------------------------------------------------------

const RiskEstimate& RiskRun::estimate(std::size_t size_index, std::size_t prior_index) const {
  return estimates.at(size_index * config.prior_ids.size() + prior_index);
}

RiskDifference RiskRun::difference(std::size_t size_index, std::size_t baseline_prior,
                                   std::size_t other_prior) const {
  const auto& base = kl.at(size_index).at(baseline_prior);
  const auto& other = kl.at(size_index).at(other_prior);
  RiskDifference out;
  out.sample_size = config.sample_sizes.at(size_index);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t r = 0; r < base.size(); ++r) {
    const double x = base[r] - other[r];
    const double delta = x - mean;
    mean += delta / static_cast<double>(r + 1);
    m2 += delta * (x - mean);
  }
  out.mean = mean;
  const auto n = static_cast<double>(base.size());
  out.std_error = base.size() > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
  return out;
}

RiskRun kl_risk(const ExperimentConfig& config) {
  config.validate();
  RiskRun run;
  run.config = config;
  std::vector<PriorGrid> grids;
  grids.reserve(config.prior_ids.size());
  for (const auto& id : config.prior_ids) grids.emplace_back(config, id);

  const std::size_t sizes = config.sample_sizes.size();
  const std::size_t priors = grids.size();
  const std::size_t reps = config.replications;
  const auto max_n = *std::ranges::max_element(config.sample_sizes);
  run.kl.assign(sizes, std::vector<std::vector<double>>(priors, std::vector<double>(reps)));

  parallel_for(reps, [&](std::size_t r) {
    const auto series = simulate_series(config.true_params, max_n, replication_seed(config.seed, r));
    for (std::size_t s = 0; s < sizes; ++s) {
      const std::vector<double> data(series.begin(),
                                     series.begin() + static_cast<std::ptrdiff_t>(config.sample_sizes[s]));
      const double true_mean = ar_conditional_mean(config.true_params, data);
      for (std::size_t k = 0; k < priors; ++k) {
        run.kl[s][k][r] = kl_divergence(true_mean, predictive_density(data, grids[k]),
                                        config.kl_tolerance);
      }
    }
  });

  for (std::size_t s = 0; s < sizes; ++s) {
    for (std::size_t k = 0; k < priors; ++k) {
      double mean = 0.0;
      double m2 = 0.0;
      const auto& values = run.kl[s][k];
      for (std::size_t r = 0; r < reps; ++r) {
        const double delta = values[r] - mean;
        mean += delta / static_cast<double>(r + 1);
        m2 += delta * (values[r] - mean);
      }
      RiskEstimate e;
      e.prior_id = config.prior_ids[k];
      e.sample_size = config.sample_sizes[s];
      e.mean_kl_risk = mean;
      const auto n = static_cast<double>(reps);
      e.std_error = reps > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
      e.replications_used = reps;
      run.estimates.push_back(e);
    }
  }
  return run;
}

}  // namespace kfp

#include "kfp/sampling.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <string>

#include "kfp/errors.hpp"

namespace kfp {

namespace {

Complex disk_uniform(std::mt19937_64& gen, double radius) {
  const double r = radius * std::sqrt(unit_uniform(gen()));
  const double theta = 2.0 * std::numbers::pi * unit_uniform(gen());
  return std::polar(r, theta);
}

bool separated(const std::vector<Complex>& poles, const std::vector<Complex>& roots,
               const SamplingDomain& domain) {
  for (std::size_t i = 0; i < poles.size(); ++i) {
    for (std::size_t k = i + 1; k < poles.size(); ++k) {
      if (std::abs(poles[i] - poles[k]) < domain.min_separation) return false;
    }
    for (const Complex mu : roots) {
      if (std::abs(poles[i] - mu) < domain.min_separation) return false;
      if (std::abs(1.0 - poles[i] * std::conj(mu)) < domain.min_one_minus_product) return false;
    }
  }
  for (std::size_t j = 0; j < roots.size(); ++j) {
    for (std::size_t l = j + 1; l < roots.size(); ++l) {
      if (std::abs(roots[j] - roots[l]) < domain.min_separation) return false;
    }
  }
  return true;
}

}  // namespace

std::vector<ParamPoint> sample_points(const FilterModel& model, const SamplingDomain& domain,
                                      std::size_t count, std::uint64_t seed) {
  if (!(domain.pole_radius > 0.0 && domain.pole_radius < 1.0)) {
    throw ConfigurationError("sampling radius must lie in (0, 1)");
  }
  std::mt19937_64 gen(seed);
  std::vector<ParamPoint> points;
  points.reserve(count);
  std::vector<Complex> poles(static_cast<std::size_t>(model.p()));
  std::vector<Complex> roots(static_cast<std::size_t>(model.q()));
  constexpr int kMaxAttempts = 100000;
  for (std::size_t s = 0; s < count; ++s) {
    int attempts = 0;
    Complex d = 0.0;
    do {
      if (++attempts > kMaxAttempts) {
        throw ConfigurationError("sampling domain too small for the separation constraints");
      }
      if (model.has_fi()) {
        d = domain.complex_d ? disk_uniform(gen, domain.d_max)
                             : Complex(domain.d_max * (2.0 * unit_uniform(gen()) - 1.0), 0.0);
      }
      for (auto& lambda : poles) lambda = disk_uniform(gen, domain.pole_radius);
      for (auto& mu : roots) mu = disk_uniform(gen, domain.pole_radius);
    } while (!separated(poles, roots, domain));

    CVector coords(static_cast<Eigen::Index>(model.dimension()));
    Eigen::Index k = 0;
    if (model.has_fi()) coords[k++] = d;
    for (const Complex lambda : poles) coords[k++] = lambda;
    for (const Complex mu : roots) coords[k++] = mu;
    points.emplace_back(std::move(coords));
  }
  return points;
}

unsigned worker_count() {
  if (const char* env = std::getenv("KFP_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace kfp

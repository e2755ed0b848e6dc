#include "kfp/special.hpp"

#include <array>
#include <cmath>

namespace kfp::special {

namespace {

// B_{2k} / (2k + 1)! for k = 1..11, the coefficients of the Bernoulli
// expansion Li2 = u - u^2/4 + sum_k c_k u^{2k+1} with u = -log(1 - z).
constexpr std::array<double, 11> kBernoulliCoeffs = {
    1.0 / 36.0,
    -1.0 / 3600.0,
    1.0 / 211680.0,
    -1.0 / 10886400.0,
    1.0 / 526901760.0,
    -4.0647616451442255e-11,
    8.9216910204564526e-13,
    -1.9939295860721076e-14,
    4.5189800296199182e-16,
    -1.0356517612181247e-17,
    2.3952186210261867e-19,
};

Complex bernoulli_series(Complex u) {
  const Complex u2 = u * u;
  Complex poly = 0.0;
  for (auto it = kBernoulliCoeffs.rbegin(); it != kBernoulliCoeffs.rend(); ++it) {
    poly = poly * u2 + *it;
  }
  return u - 0.25 * u2 + u * u2 * poly;
}

}  // namespace

Complex dilog(Complex z) {
  constexpr double pi2_6 = kZeta2;
  if (z == Complex(0.0, 0.0)) return 0.0;
  if (z == Complex(1.0, 0.0)) return pi2_6;

  const double rz = z.real();
  const double nz = std::norm(z);

  if (rz <= 0.5) {
    if (nz <= 1.0) return bernoulli_series(-std::log(1.0 - z));
    // Inversion: Li2(z) = -Li2(1/z) - pi^2/6 - log^2(-z)/2.
    const Complex lz = std::log(-z);
    return -bernoulli_series(-std::log(1.0 - 1.0 / z)) - pi2_6 - 0.5 * lz * lz;
  }
  if (nz <= 2.0 * rz) {
    // Reflection: Li2(z) = -Li2(1 - z) + pi^2/6 - log(z) log(1 - z).
    const Complex u = -std::log(z);
    return -bernoulli_series(u) + pi2_6 + u * std::log(1.0 - z);
  }
  const Complex lz = std::log(-z);
  return -bernoulli_series(-std::log(1.0 - 1.0 / z)) - pi2_6 - 0.5 * lz * lz;
}

Complex log1m_over(Complex x) {
  if (std::abs(x) < 1e-3) {
    // -sum_{r>=1} x^{r-1} / r
    Complex sum = 0.0;
    Complex power = 1.0;
    for (int r = 1; r <= 8; ++r) {
      sum -= power / static_cast<double>(r);
      power *= x;
    }
    return sum;
  }
  return std::log(1.0 - x) / x;
}

Complex log1m_over_derivative(Complex x) {
  if (std::abs(x) < 1e-3) {
    // -sum_{r>=2} (r - 1) x^{r-2} / r
    Complex sum = 0.0;
    Complex power = 1.0;
    for (int r = 2; r <= 9; ++r) {
      sum -= power * (static_cast<double>(r - 1) / static_cast<double>(r));
      power *= x;
    }
    return sum;
  }
  return (-x / (1.0 - x) - std::log(1.0 - x)) / (x * x);
}

double inverse_square_tail(std::uint64_t n) {
  if (n < 32) {
    double partial = 0.0;
    for (std::uint64_t r = n; r >= 1; --r) {
      partial += 1.0 / (static_cast<double>(r) * static_cast<double>(r));
    }
    return kZeta2 - partial;
  }
  // Euler-Maclaurin for trigamma(n + 1).
  const double x = static_cast<double>(n);
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return inv - 0.5 * inv2 +
         inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)));
}

}  // namespace kfp::special

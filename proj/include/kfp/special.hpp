#pragma once

#include <cstdint>

#include "kfp/types.hpp"

namespace kfp::special {

/// Complex dilogarithm Li2(z) = sum_{k>=1} z^k / k^2, continued to the cut
/// plane (branch cut along [1, inf)).
Complex dilog(Complex z);

/// log(1 - x) / x, continuous at x = 0 where it equals -1.
Complex log1m_over(Complex x);

/// d/dx [log(1 - x) / x].
Complex log1m_over_derivative(Complex x);

/// sum_{r > n} 1 / r^2 (trigamma(n + 1)).
double inverse_square_tail(std::uint64_t n);

}  // namespace kfp::special

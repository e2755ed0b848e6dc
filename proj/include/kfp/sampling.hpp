#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "kfp/filter_model.hpp"

namespace kfp {

/// Region of the parameter manifold used for sampled certificates: poles
/// and roots in the closed disk of radius `pole_radius`, |d| <= d_max, and
/// pairs of poles/roots kept at least `min_separation` apart (the metric
/// degenerates as a pole approaches a root or another pole).
struct SamplingDomain {
  double pole_radius = 0.9;
  double d_max = 0.45;
  bool complex_d = false;
  double min_separation = 0.05;
  double min_one_minus_product = 0.05;  // |1 - lambda_i conj(mu_j)|
};

/// `count` points for the structure of `model`, deterministic in `seed`.
std::vector<ParamPoint> sample_points(const FilterModel& model, const SamplingDomain& domain,
                                      std::size_t count, std::uint64_t seed);

/// Uniform double in [0, 1) from the top 53 bits.
inline double unit_uniform(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Worker threads: KFP_THREADS when set and positive, otherwise hardware
/// concurrency.
unsigned worker_count();

/// Runs body(i) for i in [0, count) over worker_count() threads with a
/// static partition. The first exception thrown by any worker is rethrown.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace kfp

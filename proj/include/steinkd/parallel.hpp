#pragma once

#include <cstddef>
#include <functional>

namespace steinkd {

/// Worker count used by library loops. Initialized from STEIN_THREADS
/// (0 or unset means hardware concurrency).
std::size_t thread_count();
void set_thread_count(std::size_t n);  // 0 = auto

/// Runs body(i) for i in [0, n). Iterations must be independent; callers
/// write to disjoint slots so results never depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t threads = 0);

/// Pairwise (tree) summation in a fixed order.
double pairwise_sum(const double* values, std::size_t n);

}  // namespace steinkd

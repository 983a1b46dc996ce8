#include "steinkd/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace steinkd {
namespace {

std::size_t resolve(std::size_t n) {
  if (n != 0) return n;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::size_t from_env() {
  const char* env = std::getenv("STEIN_THREADS");
  if (env == nullptr || *env == '\0') return resolve(0);
  try {
    return resolve(static_cast<std::size_t>(std::stoul(env)));
  } catch (const std::exception&) {
    return resolve(0);
  }
}

// Set on worker threads so nested loops run serially instead of oversubscribing.
thread_local bool inside_parallel_region = false;

std::atomic<std::size_t>& configured() {
  static std::atomic<std::size_t> count{from_env()};
  return count;
}

}  // namespace

std::size_t thread_count() { return configured().load(); }

void set_thread_count(std::size_t n) { configured().store(resolve(n)); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t threads) {
  if (threads == 0) threads = thread_count();
  if (threads > n) threads = n;
  if (threads <= 1 || inside_parallel_region) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    const bool was_inside = inside_parallel_region;
    inside_parallel_region = true;
    struct Restore {
      bool value;
      ~Restore() { inside_parallel_region = value; }
    } restore{was_inside};
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double pairwise_sum(const double* values, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[i];
    return s;
  }
  std::size_t half = n / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

}  // namespace steinkd

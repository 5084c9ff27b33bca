#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace driftlab {

// Runs fn(i) for i in [0, n) on `workers` threads in contiguous chunks.
// Callers must write results into per-index slots; any reduction happens
// afterwards in index order, so the outcome is worker-count invariant.
inline void parallel_for(std::uint64_t n, int workers,
                         const std::function<void(std::uint64_t)>& fn) {
  if (workers <= 1 || n < 2) {
    for (std::uint64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const int w = static_cast<int>(std::min<std::uint64_t>(workers, n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(w));
  std::exception_ptr error;
  std::mutex error_mu;
  for (int t = 0; t < w; ++t) {
    const std::uint64_t lo = n * t / w, hi = n * (t + 1) / w;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::uint64_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace driftlab

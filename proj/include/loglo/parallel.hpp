#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

#include "loglo/tensor.hpp"

namespace loglo {

/// Worker count: LOGLO_THREADS when set and positive, else hardware concurrency.
inline int thread_count() {
  if (const char* env = std::getenv("LOGLO_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, n) over contiguous chunks. Results must not
/// depend on the chunking, which keeps output independent of thread count.
inline void parallel_for(Index n, const std::function<void(Index)>& fn) {
  const Index workers = std::min<Index>(thread_count(), n);
  if (workers <= 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (Index w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (Index i = w * n / workers; i < (w + 1) * n / workers; ++i) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace loglo

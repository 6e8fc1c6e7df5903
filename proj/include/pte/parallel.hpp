#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace pte {

// Runs body(i) for i in [0, n) on up to `threads` workers. Tasks are handed
// out through an atomic counter; callers must write results into
// preallocated per-index slots and reduce in index order afterwards, which
// keeps results byte-identical across thread counts and schedules.
inline void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  if (n <= 0) return;
  if (threads > n) threads = n;
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }

  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();

  // Rethrow the lowest-index failure so the surfaced error does not depend
  // on thread timing.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Worker count: PTE_THREADS env var wins, otherwise hardware concurrency.
inline int default_threads() {
  if (const char* env = std::getenv("PTE_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace pte

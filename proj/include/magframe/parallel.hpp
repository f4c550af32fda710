#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace magframe {

// Worker count from MAGFRAME_THREADS; defaults to serial execution.
inline int thread_count() {
  if (const char* e = std::getenv("MAGFRAME_THREADS")) {
    int n = std::atoi(e);
    if (n >= 1) return n;
  }
  return 1;
}

template <class F>
inline void parallel_for(std::int64_t n, F&& fn) {
  int nt = thread_count();
  if (nt <= 1 || n < 2) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < nt; ++t)
    pool.emplace_back([&] {
      for (std::int64_t i; (i = next.fetch_add(1)) < n;) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace magframe

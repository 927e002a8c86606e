#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace dualem {

// Worker cap: DUALEM_THREADS if set and positive, else hardware concurrency.
inline int max_threads() {
  if (const char* env = std::getenv("DUALEM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Run fn(i) for i in [0, n). Each index writes only its own slots, so results
// are bit-identical regardless of the thread count.
template <typename F>
void parallel_for(int n, F&& fn) {
  const int workers = std::min(n, max_threads());
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([=, &fn]() {
      for (int i = t; i < n; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace dualem

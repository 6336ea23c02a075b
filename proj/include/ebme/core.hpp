#pragma once

#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>
#include <functional>

namespace ebme {

// Error taxonomy used across the library. The CLI maps these onto exit codes.
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};
struct RangeError : std::runtime_error {
  explicit RangeError(const std::string& msg) : std::runtime_error(msg) {}
};
struct InputError : std::runtime_error {
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Worker parallelism cap. EBME_NUM_THREADS=1 gives fully deterministic
// single-threaded execution; higher values parallelize over batch samples,
// which keeps accumulation order fixed per sample.
inline int num_threads() {
  static int cached = [] {
    if (const char* env = std::getenv("EBME_NUM_THREADS")) {
      int v = std::atoi(env);
      if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
  }();
  return cached;
}

// Runs body(i) for i in [0, count). Work is split by index; each index is
// processed by exactly one thread, so per-index results are deterministic.
inline void parallel_for(int count, const std::function<void(int)>& body) {
  int threads = std::min(num_threads(), count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < count; i += threads) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace ebme

#pragma once

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace nniv {

// Worker count: NNI_VALIDITY_THREADS when set to a positive integer, otherwise
// the hardware concurrency. Results must not depend on this value, so parallel
// loops only ever write to disjoint per-index slots.
inline unsigned thread_count() {
  if (const char* env = std::getenv("NNI_VALIDITY_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

template <typename F>
void parallel_for(std::size_t count, F&& body) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(thread_count(), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}

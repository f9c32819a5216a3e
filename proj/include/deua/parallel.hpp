#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace deua {

/// Runs fn(i) for i in [0, n) across worker threads. Each index must write
/// only to its own output slot; results are then identical to a serial loop.
inline void parallel_for(std::size_t n,
                         const std::function<void(std::size_t)>& fn) {
  const std::size_t hw = std::thread::hardware_concurrency();
  const std::size_t workers = std::min(n, hw == 0 ? std::size_t{1} : hw);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace deua

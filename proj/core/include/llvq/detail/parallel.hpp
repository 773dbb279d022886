#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace llvq::detail {

inline unsigned resolve_threads(int requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Static partition of [0, n) into contiguous chunks, one per thread. Workers
/// write only to their own slots, so results do not depend on scheduling.
template <typename Fn>
void parallel_chunks(size_t n, int threads, Fn&& fn) {
  if (n == 0) return;
  unsigned t = std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(n));
  if (t <= 1) {
    fn(size_t{0}, n);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  auto guarded = [&](size_t begin, size_t end) {
    try {
      fn(begin, end);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  const size_t chunk = (n + t - 1) / t;
  for (unsigned i = 0; i < t; ++i) {
    const size_t begin = i * chunk;
    const size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(guarded, begin, end);
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace llvq::detail

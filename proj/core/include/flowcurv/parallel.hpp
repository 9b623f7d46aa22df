#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace flowcurv {

/// Upper bound on worker threads used inside library calls. 0 means
/// hardware concurrency.
void set_thread_limit(unsigned n);
unsigned thread_limit();

/// Calls fn(i) for i in [0, n) over contiguous chunks. Each index is visited
/// exactly once, so writes to per-index slots are deterministic.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t min_chunk = 4096) {
  const std::size_t workers = std::min<std::size_t>(thread_limit(), (n + min_chunk - 1) / min_chunk);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
}

}  // namespace flowcurv

#include "flowcurv/parallel.hpp"

#include <atomic>

namespace flowcurv {

namespace {
std::atomic<unsigned> g_limit{0};
}

void set_thread_limit(unsigned n) { g_limit = n; }

unsigned thread_limit() {
  const unsigned n = g_limit;
  if (n != 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace flowcurv

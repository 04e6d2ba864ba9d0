#include "gda/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gda::par {

namespace {
std::atomic<int> g_threads{0};

int default_threads() {
  if (const char* env = std::getenv("GDA_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}
}  // namespace

int threads() {
  int n = g_threads.load(std::memory_order_relaxed);
  return n >= 1 ? n : default_threads();
}

void set_threads(int n) { g_threads.store(n < 1 ? 1 : n, std::memory_order_relaxed); }

bool want_parallel() {
#ifdef _OPENMP
  return threads() > 1 && !omp_in_parallel();
#else
  return false;
#endif
}

}  // namespace gda::par

#include "qpyramid/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qpyramid::parallel {

namespace {
std::atomic<int> g_cap{0};

int env_cap() {
  const char* env = std::getenv("QPYRAMID_WORKERS");
  if (env == nullptr) return 0;
  try {
    return std::max(0, std::stoi(env));
  } catch (const std::exception&) {
    return 0;
  }
}
}  // namespace

int worker_count() {
#ifdef _OPENMP
  int workers = omp_get_max_threads();
#else
  int workers = 1;
#endif
  if (const int cap = g_cap.load(); cap > 0) workers = cap;
  if (const int env = env_cap(); env > 0) workers = std::min(workers, env);
  return std::max(1, workers);
}

void set_worker_cap(int workers) { g_cap.store(std::max(0, workers)); }

}  // namespace qpyramid::parallel

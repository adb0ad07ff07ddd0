#pragma once

#include <cstdlib>
#include <string>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace fissura::par {

namespace detail {
// 0 = not yet resolved from the environment.
inline int& thread_override() {
  static int value = 0;
  return value;
}
}  // namespace detail

/// Number of threads parallel kernels may use.  Defaults to the
/// FISSURA_THREADS environment variable; absent or invalid means 1.
/// All kernels produce bit-identical results for any thread count.
inline int max_threads() {
  int& v = detail::thread_override();
  if (v > 0) return v;
  int n = 1;
  if (const char* env = std::getenv("FISSURA_THREADS")) {
    char* end = nullptr;
    long parsed = std::strtol(env, &end, 10);
    if (end != env && parsed > 0) n = static_cast<int>(parsed);
  }
#if defined(_OPENMP)
  if (n > omp_get_max_threads()) n = omp_get_max_threads();
#else
  n = 1;
#endif
  if (n < 1) n = 1;
  v = n;
  return v;
}

/// Programmatic override (used by tests to compare thread counts).
inline void set_max_threads(int n) { detail::thread_override() = n < 1 ? 1 : n; }

}  // namespace fissura::par

#pragma once

// Execution policy for the Monte-Carlo kernels. Every parallel loop in the
// library draws from substreams keyed by loop index (shard, center, or
// replicate), so serial and parallel execution produce identical results.
// The serial path is the reference implementation the tests compare against.

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace forensics {

enum class Exec { serial, parallel };

template <class Fn>
void par_for(int64_t n, Exec exec, Fn&& fn) {
#ifdef _OPENMP
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
#else
  (void)exec;
#endif
  for (int64_t i = 0; i < n; ++i) fn(i);
}

inline int worker_count(Exec exec) {
#ifdef _OPENMP
  if (exec == Exec::parallel) return omp_get_max_threads();
#else
  (void)exec;
#endif
  return 1;
}

}  // namespace forensics

#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ofp {

/// Execution mode for the data-parallel kernels (sweep synthesis, dataset
/// fitting, noise injection). Serial is the reference path; Parallel runs
/// the same per-index work under OpenMP. Every kernel derives independent
/// per-index RNG streams, so the two modes produce identical results.
enum class ExecMode { Serial, Parallel };

template <class Fn>
void parallel_for(std::size_t n, ExecMode mode, Fn&& fn) {
#ifdef _OPENMP
  if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      fn(static_cast<std::size_t>(i));
    return;
  }
#else
  (void)mode;
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace ofp

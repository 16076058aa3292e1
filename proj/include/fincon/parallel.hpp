#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fincon {

// threads = 0 leaves the OpenMP default alone.  Every parallel loop in the
// library writes disjoint output slots, so the thread count never changes
// results, only wall time.
inline void set_threads(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace fincon

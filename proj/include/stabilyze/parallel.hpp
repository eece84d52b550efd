#pragma once

// Work-sharing over independent items (paths, grid points, resamples). The
// OpenMP kernel and the serial reference produce identical results because
// each item is a pure function of its index; STABILYZE_THREADS caps the
// thread count.

#include <cstdlib>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stabilyze {

inline int thread_budget() {
    int m = int(std::thread::hardware_concurrency());
#ifdef _OPENMP
    m = omp_get_max_threads();
#endif
    if (m < 1) m = 1;
    if (const char* s = std::getenv("STABILYZE_THREADS")) {
        const int v = std::atoi(s);
        if (v > 0 && v < m) m = v;
    }
    return m;
}

// Serial reference kernel.
template <class F>
void serial_for(long n, F&& f) {
    for (long i = 0; i < n; ++i) f(i);
}

template <class F>
void parallel_for(long n, F&& f, bool force_serial = false) {
    const int threads = force_serial ? 1 : thread_budget();
    if (threads == 1) {
        serial_for(n, f);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long i = 0; i < n; ++i) f(i);
#else
    serial_for(n, f);
#endif
}

}  // namespace stabilyze

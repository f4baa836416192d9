#pragma once

#include <cstdlib>

#include <omp.h>

namespace netisac {

/// Thread cap for every OpenMP region. NETISAC_THREADS overrides the OpenMP
/// default; values < 1 or unparsable fall back to it.
inline int thread_count() {
    static const int n = [] {
        if (const char* env = std::getenv("NETISAC_THREADS")) {
            const int v = std::atoi(env);
            if (v >= 1) return v;
        }
        return omp_get_max_threads();
    }();
    return n;
}

}  // namespace netisac

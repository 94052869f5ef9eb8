// SPDX-License-Identifier: MIT
#pragma once

#include <omp.h>

namespace svdnf {

/// Caps worker parallelism inside the engines. 0 restores the runtime default.
inline void set_thread_count(int n) {
    static const int default_threads = omp_get_max_threads();
    omp_set_num_threads(n > 0 ? n : default_threads);
}

[[nodiscard]] inline int thread_count() { return omp_get_max_threads(); }

}  // namespace svdnf

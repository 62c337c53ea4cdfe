#ifndef MPRF_PARALLEL_H_
#define MPRF_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace mprf {

// Runs body(i) for every i in [0, count) on up to `workers` threads
// (0: one per hardware thread). Indices are claimed in order; the first
// exception thrown by any body is rethrown after all threads stop.
void ParallelFor(size_t count, const std::function<void(size_t)>& body, unsigned workers = 0);

}  // namespace mprf

#endif  // MPRF_PARALLEL_H_

#pragma once

#include <cstddef>
#include <functional>

namespace bonsai {

/// Worker count used by parallel loops. Defaults to BONSAI_THREADS when set,
/// otherwise the hardware concurrency.
std::size_t worker_count();

/// Overrides the worker count for this process; 0 restores the default.
void set_worker_count(std::size_t n);

/// Calls body(begin, end) over contiguous chunks covering [0, n). Chunks are
/// disjoint, so bodies that only write their own slots give results that do
/// not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace bonsai

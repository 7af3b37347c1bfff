#pragma once

#include <functional>

#include "hik/types.hpp"

namespace hik {

/// Global cap on worker threads used inside library kernels. 0 restores the default
/// (std::thread::hardware_concurrency()).
void set_num_threads(int n);
int num_threads();

/// Splits [begin, end) into contiguous chunks and runs fn(chunk_begin, chunk_end) on each.
/// Chunks are disjoint, so callers writing to chunk-local output rows need no locking.
void parallel_for(Index begin, Index end, Index grain, const std::function<void(Index, Index)>& fn);

} // namespace hik

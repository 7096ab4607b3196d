#pragma once

#include <cstddef>
#include <functional>

namespace kdlseg {

/// Number of worker threads to use when the caller passes 0: the
/// KDLSEG_THREADS environment variable if set and positive, otherwise the
/// hardware concurrency (at least 1).
std::size_t default_thread_count();

/// Resolves a requested thread count (0 = default) to a positive number.
std::size_t resolve_threads(std::size_t requested);

/// Splits [0, count) into contiguous chunks and runs `body(begin, end)` on up
/// to `threads` threads. Chunk boundaries depend only on `count` and the
/// resolved thread count; callers that write to disjoint per-index slots get
/// results independent of the thread count. Exceptions thrown by `body` are
/// rethrown on the calling thread (first one wins).
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace kdlseg

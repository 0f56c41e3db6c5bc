#pragma once

#include <cstddef>
#include <functional>

namespace lorlut {

/// Worker count used by the image-wide kernels. Defaults to the LORLUT_THREADS
/// environment variable, else the hardware concurrency.
int thread_count();
void set_thread_count(int n);

/// Runs body(begin, end) over [0, n) split into contiguous chunks, one per
/// worker. Chunks never overlap, so per-element writes need no coordination.
/// No worker gets fewer than `min_chunk` elements.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 16384);

}  // namespace lorlut

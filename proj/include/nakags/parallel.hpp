#pragma once

#include <cstddef>
#include <functional>

namespace nakags {

/// Worker count from NAKAGS_THREADS; unset, empty or 0 means
/// std::thread::hardware_concurrency(). Never returns 0.
std::size_t configured_threads();

/// Calls body(begin, end) over contiguous chunks of [0, n) on up to
/// `threads` workers. Chunk boundaries depend only on n and threads; bodies
/// must write disjoint outputs.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t begin, std::size_t end)>& body);

}  // namespace nakags

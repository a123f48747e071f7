#pragma once

#include <cstddef>
#include <functional>

namespace bwpart {

/// Number of worker threads for a request: 0 means hardware concurrency.
unsigned resolve_threads(unsigned requested);

/// Splits [0, n) into contiguous chunks and runs body(begin, end) on up to
/// `threads` workers. Results must be written by index so the outcome does
/// not depend on the split. Exceptions from any worker are rethrown.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace bwpart

#ifndef QKITER_PARALLEL_H_
#define QKITER_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace qkiter {

// Splits [0, n) into at most `workers` contiguous blocks and runs `body` on
// each, blocking until all are done. Exceptions from any block are rethrown
// (the lowest block's first). With workers <= 1 runs inline.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t begin, std::size_t end)>& body);

}  // namespace qkiter

#endif  // QKITER_PARALLEL_H_

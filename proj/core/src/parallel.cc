#include "qkiter/parallel.h"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace qkiter {

void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  const std::size_t blocks = std::clamp<std::size_t>(workers, 1, n);
  if (blocks == 1) {
    body(0, n);
    return;
  }
  std::vector<std::exception_ptr> errors(blocks);
  {
    std::vector<std::jthread> threads;
    threads.reserve(blocks - 1);
    auto run = [&](std::size_t b) {
      const std::size_t begin = n * b / blocks;
      const std::size_t end = n * (b + 1) / blocks;
      try {
        body(begin, end);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    };
    for (std::size_t b = 1; b < blocks; ++b) threads.emplace_back(run, b);
    run(0);
  }
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
}

}  // namespace qkiter

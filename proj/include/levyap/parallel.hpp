#pragma once

#include <cstddef>
#include <functional>

namespace levyap {

// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware
// concurrency). Each index runs exactly once; the exception thrown by the
// lowest failing index is rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

std::size_t resolve_threads(std::size_t requested);

}  // namespace levyap

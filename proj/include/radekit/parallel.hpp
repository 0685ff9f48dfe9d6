#pragma once

#include <cstddef>
#include <functional>

namespace radekit {

// Runs fn(0..n-1) on up to `jobs` threads (0 means hardware concurrency).
// Callers write results by index, so output never depends on scheduling. If
// any call throws, the exception from the lowest index is rethrown.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

std::size_t resolve_jobs(std::size_t jobs);

}  // namespace radekit

#pragma once

#include <cstddef>
#include <functional>

namespace ckt {

/// Number of worker threads used by parallel_for (defaults to hardware concurrency).
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Runs body(i) for i in [0, n). Iterations must write to disjoint outputs;
/// callers reduce results in index order, so output never depends on the
/// schedule. Calls nested inside a running parallel_for execute serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace ckt

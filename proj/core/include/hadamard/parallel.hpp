#pragma once

#include "hadamard/types.hpp"

#include <functional>

namespace hadamard {

/// Number of worker threads used by parallel_for. Defaults to 1.
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, n) on up to thread_count() threads with static
/// contiguous chunking. Callers write results by index, so output never
/// depends on the thread count. The first exception thrown is rethrown.
void parallel_for(Index n, const std::function<void(Index)>& body);

} // namespace hadamard

#pragma once

#include <cstddef>
#include <functional>

namespace crharq {

/// Name of the environment variable overriding the worker count.
inline constexpr const char* kWorkersEnv = "CRHARQ_WORKERS";

/// Worker count: $CRHARQ_WORKERS if set and positive, else the hardware
/// concurrency (at least 1).
std::size_t worker_count();

/// Runs task(i) for i in [0, tasks) on up to worker_count() threads. Tasks are
/// handed out dynamically; callers must write results into per-task slots so
/// the outcome is independent of scheduling. The first exception thrown by a
/// task is rethrown after all workers join.
void parallel_for(std::size_t tasks, const std::function<void(std::size_t)>& task);

}  // namespace crharq

#pragma once

#include <cstddef>
#include <functional>

namespace phmm {

// Runs body(i, worker) for i in [0, count) on up to `jobs` threads. Indices are
// handed out dynamically, so callers must write results into slot i rather
// than append; `worker` in [0, jobs) lets them keep per-thread scratch.
// jobs == 0 means one thread per hardware core. The first exception thrown by
// any body is rethrown after all threads stop.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t, std::size_t)>& body);

std::size_t resolve_jobs(std::size_t jobs, std::size_t count);

}  // namespace phmm

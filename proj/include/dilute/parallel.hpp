#pragma once

#include <cstddef>
#include <functional>

namespace dilute {

/// Worker count used by solver internals and ensemble scheduling. Defaults to
/// DILUTE_HOMOG_THREADS when set, else the number of logical cores.
int worker_count();
void set_worker_count(int workers);

/// Work is split into fixed blocks whose boundaries do not depend on the
/// worker count, so per-block partial sums reduced in block order give the
/// same floating-point result for any number of workers.
inline constexpr std::size_t kBlockSize = 16384;

/// Runs fn(begin, end) for every block of [0, n) on up to `workers` threads
/// (0 means worker_count()).
void parallel_blocks(std::size_t n, int workers, const std::function<void(std::size_t, std::size_t)>& fn);

/// Σ_blocks fn(begin, end), reduced in block order.
double parallel_sum(std::size_t n, int workers, const std::function<double(std::size_t, std::size_t)>& fn);

/// Runs task(i) for i in [0, count) on up to `workers` threads, dynamically scheduled.
void parallel_tasks(std::size_t count, int workers, const std::function<void(std::size_t)>& task);

}  // namespace dilute

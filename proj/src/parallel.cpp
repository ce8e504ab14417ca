#include "dilute/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dilute {
namespace {

std::atomic<int> g_workers{0};

int default_workers() {
  if (const char* env = std::getenv("DILUTE_HOMOG_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void run_pool(std::size_t count, int workers, const std::function<void(std::size_t)>& task) {
  if (workers <= 0) workers = worker_count();
  workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> threads;
  for (int w = 1; w < workers; ++w) threads.emplace_back(body);
  body();
  threads.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace

int worker_count() {
  int w = g_workers.load();
  return w > 0 ? w : default_workers();
}

void set_worker_count(int workers) { g_workers.store(std::max(0, workers)); }

void parallel_blocks(std::size_t n, int workers, const std::function<void(std::size_t, std::size_t)>& fn) {
  const std::size_t blocks = (n + kBlockSize - 1) / kBlockSize;
  run_pool(blocks, workers, [&](std::size_t b) { fn(b * kBlockSize, std::min(n, (b + 1) * kBlockSize)); });
}

double parallel_sum(std::size_t n, int workers, const std::function<double(std::size_t, std::size_t)>& fn) {
  const std::size_t blocks = (n + kBlockSize - 1) / kBlockSize;
  std::vector<double> partial(blocks, 0.0);
  run_pool(blocks, workers, [&](std::size_t b) {
    partial[b] = fn(b * kBlockSize, std::min(n, (b + 1) * kBlockSize));
  });
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

void parallel_tasks(std::size_t count, int workers, const std::function<void(std::size_t)>& task) {
  run_pool(count, workers, task);
}

}  // namespace dilute

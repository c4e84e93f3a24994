#include "phaselab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace phaselab {

namespace {
std::atomic<int> g_threads{1};

void run_indexed(std::size_t count, const std::function<void(std::size_t)>& task) {
  const int workers = std::min<std::size_t>(static_cast<std::size_t>(g_threads.load()), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}
}  // namespace

void set_thread_count(int threads) { g_threads = std::max(1, threads); }
int thread_count() { return g_threads.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  run_indexed(chunks, [&](std::size_t c) { body(c * kChunk, std::min(n, (c + 1) * kChunk)); });
}

double chunked_sum(std::size_t n, const std::function<double(std::size_t, std::size_t)>& body) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
  run_indexed(chunks, [&](std::size_t c) { partial[c] = body(c * kChunk, std::min(n, (c + 1) * kChunk)); });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

void parallel_tasks(std::size_t count, const std::function<void(std::size_t)>& task) {
  run_indexed(count, task);
}

}  // namespace phaselab

#include "specmap/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace specmap {

namespace {
std::atomic<int> g_thread_count{0};  // 0 = not set yet
std::atomic<unsigned long long> g_seed{0};
}  // namespace

int thread_count() {
  int n = g_thread_count.load(std::memory_order_relaxed);
  if (n > 0) return n;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void set_thread_count(int n) { g_thread_count.store(n < 1 ? 1 : n, std::memory_order_relaxed); }

void set_random_seed(unsigned long long seed) { g_seed.store(seed, std::memory_order_relaxed); }

unsigned long long random_seed() { return g_seed.load(std::memory_order_relaxed); }

void parallel_chunks(int n_chunks, const std::function<void(int, int)>& fn) {
  if (n_chunks <= 0) return;
  const int workers = thread_count();
  if (workers == 1 || n_chunks == 1) {
    for (int c = 0; c < n_chunks; ++c) fn(c, 0);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run_worker = [&](int w) {
    try {
      for (int c = w; c < n_chunks; c += workers) fn(c, w);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<size_t>(workers) - 1);
  for (int w = 1; w < workers; ++w) threads.emplace_back(run_worker, w);
  run_worker(0);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace specmap

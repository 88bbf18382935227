#include "sobonet/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace sobonet {
namespace {

std::atomic<std::size_t> g_threads{0};

std::size_t from_env() {
  if (const char* s = std::getenv("SOBONET_THREADS")) {
    try {
      const long v = std::stol(s);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

}  // namespace

std::size_t thread_count() {
  std::size_t n = g_threads.load();
  if (n == 0) {
    n = from_env();
    g_threads.store(n);
  }
  return n;
}

void set_thread_count(std::size_t n) { g_threads.store(std::max<std::size_t>(n, 1)); }

void parallel_tasks(std::size_t n, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

void parallel_blocks(std::size_t n, std::size_t block,
                     const std::function<void(std::size_t, std::size_t)>& body) {
  if (block == 0) block = 1;
  const std::size_t blocks = (n + block - 1) / block;
  parallel_tasks(blocks, [&](std::size_t b) { body(b * block, std::min(n, (b + 1) * block)); });
}

}  // namespace sobonet

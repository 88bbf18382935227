#pragma once

#include <cstddef>
#include <functional>

namespace sobonet {

// Worker count used by the library; defaults to SOBONET_THREADS or 1.
std::size_t thread_count();
void set_thread_count(std::size_t n);

// Runs body(begin, end) over contiguous blocks of [0, n). Blocks depend only on n and the
// block size, never on the worker count, so per-block results merge deterministically.
void parallel_blocks(std::size_t n, std::size_t block, const std::function<void(std::size_t, std::size_t)>& body);

// Runs task(i) for i in [0, n) on the worker pool.
void parallel_tasks(std::size_t n, const std::function<void(std::size_t)>& task);

}  // namespace sobonet

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace pmc {

/// Process-wide cap on kernel worker threads (the CLI's --threads flag).
void set_worker_threads(int threads);
int worker_threads();

/// Runs f(begin, end, block) over fixed-size blocks of [0, count). The block
/// partition does not depend on the thread count, so per-block reductions
/// combined in block order are bit-reproducible.
template <class F>
void for_each_block(std::size_t count, std::size_t block_size, F&& f) {
  const std::size_t blocks = (count + block_size - 1) / block_size;
  const int threads = std::min<int>(worker_threads(), static_cast<int>(blocks));
  auto run = [&](std::size_t first_block, std::size_t stride) {
    for (std::size_t b = first_block; b < blocks; b += stride)
      f(b * block_size, std::min(count, (b + 1) * block_size), b);
  };
  if (threads <= 1) {
    run(0, 1);
    return;
  }
  std::vector<std::exception_ptr> failure(static_cast<std::size_t>(threads));
  auto guarded = [&](std::size_t t) {
    try {
      run(t, static_cast<std::size_t>(threads));
    } catch (...) {
      failure[t] = std::current_exception();
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(threads - 1));
    for (int t = 1; t < threads; ++t) pool.emplace_back(guarded, static_cast<std::size_t>(t));
    guarded(0);
  }
  for (const auto& e : failure)
    if (e) std::rethrow_exception(e);
}

inline std::size_t block_count(std::size_t count, std::size_t block_size) {
  return (count + block_size - 1) / block_size;
}

}  // namespace pmc

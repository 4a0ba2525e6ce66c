#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lyspin {

/// Worker count for the parallel kernels. Results never depend on it: work is
/// always cut into the same blocks and partial results are merged in block order.
struct Parallelism {
  unsigned threads = 1;

  static Parallelism hardware() {
    unsigned n = std::thread::hardware_concurrency();
    return {n == 0 ? 1u : n};
  }
};

/// Runs body(i) for i in [0, count) on up to `par.threads` workers. Indices are
/// claimed dynamically; callers must write results into per-index slots.
template <class Body>
void parallel_for(std::size_t count, Parallelism par, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, par.threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);
}

/// Fixed-order reduction: block b always covers the same index range and the
/// partial results are folded left to right, so the floating-point result is
/// bit-identical for every thread count.
template <class Acc, class MakeAcc, class BlockBody, class Merge>
Acc block_reduce(std::size_t total, std::size_t block_size, Parallelism par, MakeAcc&& make,
                 BlockBody&& block_body, Merge&& merge) {
  const std::size_t blocks = total == 0 ? 0 : (total + block_size - 1) / block_size;
  std::vector<Acc> partial;
  partial.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) partial.push_back(make());
  parallel_for(blocks, par, [&](std::size_t b) {
    const std::size_t begin = b * block_size;
    const std::size_t end = std::min(total, begin + block_size);
    block_body(begin, end, partial[b]);
  });
  Acc result = make();
  for (auto& p : partial) merge(result, p);
  return result;
}

}  // namespace lyspin

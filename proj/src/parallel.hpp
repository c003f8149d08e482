#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wtw::detail {

/// Segments are processed in fixed-size blocks whose boundaries do not
/// depend on the thread count, so merging per-block results in block order
/// gives the same floating-point sums for any number of workers.
inline constexpr std::size_t kBlockSize = 256;

/// Runs fn(begin, end) for each block of [0, n) and returns the per-block
/// results in block order.
template <typename Result, typename Fn>
std::vector<Result> map_blocks(std::size_t n, unsigned threads, Fn&& fn) {
  const std::size_t blocks = (n + kBlockSize - 1) / kBlockSize;
  std::vector<Result> results(blocks);
  auto run = [&](std::size_t b) {
    const std::size_t begin = b * kBlockSize;
    results[b] = fn(begin, std::min(n, begin + kBlockSize));
  };
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), blocks));
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run(b);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t b = next++; b < blocks; b = next++) {
          try {
            run(b);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace wtw::detail

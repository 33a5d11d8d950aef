#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace colbreak {

// Deterministic chunked parallelism. Work is cut into fixed-size chunks that
// do not depend on the thread count; each chunk writes into its own slot and
// the caller merges slots in chunk order. Results are therefore bit-identical
// for any number of threads.
inline constexpr std::size_t kParallelChunk = 16;

inline std::size_t chunk_count(std::size_t items, std::size_t chunk = kParallelChunk) {
  return items == 0 ? 0 : (items + chunk - 1) / chunk;
}

/// Runs fn(chunk_index, begin, end) over [0, items) in chunks. threads <= 1
/// executes inline in chunk order.
template <typename Fn>
void for_each_chunk(std::size_t items, int threads, Fn&& fn,
                    std::size_t chunk = kParallelChunk) {
  const std::size_t nchunks = chunk_count(items, chunk);
  if (nchunks == 0) return;
  auto run_chunk = [&](std::size_t ci) {
    const std::size_t b = ci * chunk;
    const std::size_t e = std::min(items, b + chunk);
    fn(ci, b, e);
  };
  if (threads <= 1 || nchunks == 1) {
    for (std::size_t ci = 0; ci < nchunks; ++ci) run_chunk(ci);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t ci = next.fetch_add(1);
      if (ci >= nchunks) break;
      run_chunk(ci);
    }
  };
  const std::size_t nthreads =
      std::min<std::size_t>(static_cast<std::size_t>(threads), nchunks);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace colbreak

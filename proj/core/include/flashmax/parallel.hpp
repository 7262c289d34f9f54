#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace flashmax {

/// Rows per work unit for batched evaluation. Chunk boundaries depend only on
/// the batch size, never on the worker count, so per-chunk partial results
/// combined in chunk order are bit-identical for any number of workers.
inline constexpr std::ptrdiff_t kChunkRows = 64;

inline std::ptrdiff_t chunk_count(std::ptrdiff_t rows,
                                  std::ptrdiff_t chunk = kChunkRows) {
  return rows <= 0 ? 0 : (rows + chunk - 1) / chunk;
}

/// Calls fn(chunk_index, begin, end) for every chunk of [0, rows). Chunks are
/// distributed round-robin over `workers` threads; workers <= 1 runs inline.
inline void for_each_chunk(
    std::ptrdiff_t rows, int workers,
    const std::function<void(std::ptrdiff_t, std::ptrdiff_t, std::ptrdiff_t)>&
        fn,
    std::ptrdiff_t chunk = kChunkRows) {
  const std::ptrdiff_t n_chunks = chunk_count(rows, chunk);
  auto run = [&](std::ptrdiff_t c) {
    const std::ptrdiff_t begin = c * chunk;
    fn(c, begin, std::min(rows, begin + chunk));
  };
  if (workers <= 1 || n_chunks <= 1) {
    for (std::ptrdiff_t c = 0; c < n_chunks; ++c) run(c);
    return;
  }
  const int n_threads =
      static_cast<int>(std::min<std::ptrdiff_t>(workers, n_chunks));
  std::vector<std::jthread> pool;
  pool.reserve(n_threads);
  for (int w = 0; w < n_threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::ptrdiff_t c = w; c < n_chunks; c += n_threads) run(c);
    });
  }
}

}  // namespace flashmax

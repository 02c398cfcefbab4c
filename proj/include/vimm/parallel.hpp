#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace vimm {

// Runs fn(begin, end) over contiguous chunks of [0, n). Chunk boundaries
// depend only on n and the worker count, and each chunk owns a disjoint
// output range, so results must not depend on scheduling. Callers that
// need reductions gather per-index results and combine them in index
// order afterwards.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  if (n == 0) return;
  if (workers <= 1 || n == 1) {
    fn(std::size_t{0}, n);
    return;
  }
  const unsigned used = static_cast<unsigned>(
      std::min<std::size_t>(workers, n));
  std::vector<std::thread> pool;
  pool.reserve(used);
  const std::size_t base = n / used;
  const std::size_t extra = n % used;
  std::size_t begin = 0;
  for (unsigned w = 0; w < used; ++w) {
    const std::size_t len = base + (w < extra ? 1 : 0);
    const std::size_t end = begin + len;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    begin = end;
  }
  for (auto& t : pool) t.join();
}

}  // namespace vimm

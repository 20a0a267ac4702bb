#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace depthup::detail {

/// Runs fn(row_begin, row_end) over contiguous row blocks. Each row is handled by exactly
/// one worker, so per-row results do not depend on the thread count.
template <class Fn>
void parallel_rows(int rows, int threads, Fn&& fn) {
  const int workers = std::clamp(threads, 1, std::max(rows, 1));
  if (workers == 1) {
    fn(0, rows);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const int begin = rows * w / workers;
    const int end = rows * (w + 1) / workers;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
}

}  // namespace depthup::detail

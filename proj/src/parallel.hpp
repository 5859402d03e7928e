#pragma once

// Fixed-partition block runner. Work is split into contiguous index blocks
// whose boundaries depend only on the block count, so per-index results are
// identical in both modes. Reductions across blocks are combined in block
// order by the caller; in parallel mode that order differs from the strict
// sequential sum and results may move at the 1e-13 level.

#include "ncfm/common.hpp"

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace ncfm::detail {

inline std::size_t block_count(Eigen::Index count, const Execution& exec) {
  if (exec.strict || count < 64) return 1;
  const unsigned hw = exec.threads ? exec.threads : std::max(1u, std::thread::hardware_concurrency());
  return std::clamp<std::size_t>(hw, 1, static_cast<std::size_t>(count));
}

template <class Fn>
void for_blocks(Eigen::Index count, const Execution& exec, Fn&& fn) {
  const std::size_t blocks = block_count(count, exec);
  if (blocks == 1) {
    fn(Eigen::Index{0}, count, std::size_t{0});
    return;
  }
  const Eigen::Index step = (count + static_cast<Eigen::Index>(blocks) - 1) / static_cast<Eigen::Index>(blocks);
  std::vector<std::jthread> workers;
  workers.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    const Eigen::Index begin = std::min(count, static_cast<Eigen::Index>(b) * step);
    const Eigen::Index end = std::min(count, begin + step);
    workers.emplace_back([&fn, begin, end, b] { fn(begin, end, b); });
  }
}

}  // namespace ncfm::detail

#pragma once

// Deterministic parallel reductions.
//
// Work is cut into fixed-size blocks whose boundaries depend only on the item
// count. Each block is reduced sequentially and the block partials are merged
// in a fixed pairwise tree, so results are bit-identical for every thread count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace qrc {

inline constexpr std::size_t kBlockSize = 1024;

namespace detail {
inline std::atomic<int>& thread_setting() {
  static std::atomic<int> n{1};
  return n;
}
}  // namespace detail

/// Worker threads used by grid sweeps; 0 selects the hardware concurrency.
inline void set_thread_count(int n) {
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  detail::thread_setting().store(n);
}
inline int thread_count() { return detail::thread_setting().load(); }

/// Calls block_fn(begin, end) for every block of [0, count) and returns the
/// results indexed by block. The first exception (in block order) is rethrown.
template <class BlockFn>
auto map_blocks(std::size_t count, BlockFn&& block_fn) -> std::vector<decltype(block_fn(std::size_t{}, std::size_t{}))> {
  using R = decltype(block_fn(std::size_t{}, std::size_t{}));
  const std::size_t blocks = (count + kBlockSize - 1) / kBlockSize;
  std::vector<std::optional<R>> slots(blocks);
  std::vector<std::exception_ptr> errors(blocks);
  auto run = [&](std::size_t b) {
    try {
      slots[b].emplace(block_fn(b * kBlockSize, std::min(count, (b + 1) * kBlockSize)));
    } catch (...) {
      errors[b] = std::current_exception();
    }
  };
  const int workers = std::min<int>(thread_count(), static_cast<int>(std::max<std::size_t>(blocks, 1)));
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1)) run(b);
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<R> out;
  out.reserve(blocks);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// Pairwise tree reduction with a fixed shape for a given length.
template <class T, class Combine>
T tree_reduce(std::vector<T> parts, T identity, Combine&& combine) {
  if (parts.empty()) return identity;
  while (parts.size() > 1) {
    std::vector<T> next;
    next.reserve((parts.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) next.push_back(combine(std::move(parts[i]), parts[i + 1]));
    if (parts.size() % 2) next.push_back(std::move(parts.back()));
    parts = std::move(next);
  }
  return std::move(parts.front());
}

}  // namespace qrc

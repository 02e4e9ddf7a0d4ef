#pragma once

// Deterministic parallel trial batches. Trials are cut into fixed-size
// blocks; block b draws from an RNG seeded by (seed, b), so the merged
// result is independent of how many workers run.

#include <atomic>
#include <cstdint>
#include <functional>
#include <random>
#include <thread>
#include <vector>

namespace clusterqed {

inline constexpr std::uint64_t kTrialBlockSize = 4096;

/// Worker count: hardware concurrency, capped by the SIM_THREADS environment
/// variable when it holds a positive integer, and by `blocks`.
std::size_t worker_count(std::size_t blocks);

/// RNG for one block, seeded from both the run seed and the block index.
std::mt19937_64 block_rng(std::uint64_t seed, std::uint64_t block);

/// Calls run(block_rng(seed, b), trials_in_block) for every block and merges
/// the results in block order with operator+=.
template <class Tally>
Tally run_blocks(std::uint64_t trials, std::uint64_t seed,
                 const std::function<Tally(std::mt19937_64&, std::uint64_t)>& run,
                 std::uint64_t block_size = kTrialBlockSize) {
  const std::uint64_t blocks = (trials + block_size - 1) / block_size;
  std::vector<Tally> results(blocks);
  std::atomic<std::uint64_t> next{0};
  auto work = [&] {
    for (std::uint64_t b = next++; b < blocks; b = next++) {
      auto rng = block_rng(seed, b);
      const std::uint64_t count = std::min(block_size, trials - b * block_size);
      results[b] = run(rng, count);
    }
  };
  const std::size_t workers = worker_count(blocks);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
  }
  Tally total{};
  for (const auto& r : results) total += r;
  return total;
}

}  // namespace clusterqed

#include "clusterqed/trials.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <string_view>

namespace clusterqed {

std::size_t worker_count(std::size_t blocks) {
  std::size_t n = std::max(1U, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SIM_THREADS")) {
    const std::string_view text(env);
    std::size_t cap = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), cap);
    if (ec == std::errc{} && ptr == text.data() + text.size() && cap > 0) n = std::min(n, cap);
  }
  return std::max<std::size_t>(1, std::min(n, blocks));
}

std::mt19937_64 block_rng(std::uint64_t seed, std::uint64_t block) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32U),
                    static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32U)};
  return std::mt19937_64(seq);
}

}  // namespace clusterqed

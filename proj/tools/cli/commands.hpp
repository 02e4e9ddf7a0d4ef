#pragma once

#include <cstdint>
#include <optional>

#include "config.hpp"
#include "report.hpp"

namespace clusterqed::cli {

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  bool exact_only = false;
};

inline constexpr std::uint64_t kDefaultTrials = 100'000;
inline constexpr std::uint64_t kDefaultGrowthTrials = 10'000;
inline constexpr std::uint64_t kMaxTrials = 1'000'000'000;

Report cmd_generate(const RunConfig& config, const RunOptions& options);
Report cmd_sweep(const RunConfig& config, const RunOptions& options);
Report cmd_network(const RunConfig& config, const RunOptions& options);
Report cmd_oracle(const RunConfig& config, const RunOptions& options);
Report cmd_fuse(const RunConfig& config, const RunOptions& options);

}  // namespace clusterqed::cli

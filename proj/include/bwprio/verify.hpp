#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bwprio {

struct SuiteOptions {
  std::uint64_t seed = 1;
  std::optional<std::size_t> runs;  // suite-specific size, see each suite
  unsigned jobs = 1;
};

struct SuiteReport {
  std::string suite;
  bool passed = true;
  std::size_t checks = 0;
  std::size_t failures = 0;
  std::string summary;             // one line
  std::vector<std::string> lines;  // witnesses and per-case results
};

std::span<const std::string_view> suite_names();

// Throws std::invalid_argument for an unknown suite.
SuiteReport run_suite(std::string_view name, const SuiteOptions& options = {});

// Six natural models x `runs` (default 20) random SPQ scenarios x 50 bid pairs.
SuiteReport verify_monotonicity(const SuiteOptions& options = {});

/// Fig. 3 scenario at capacity 25 under BKS. For each buyer and each bid
/// factor in {0.5, 0.8, 1.2, 2} the truthful bid must not lose more than the
/// one-sided 95% margin of the paired utility difference. `runs` defaults to 10^4.
SuiteReport verify_truthfulness(const SuiteOptions& options = {});

// Every built-in model plus the quota fixture; exactly the fixture must fail.
SuiteReport verify_natural(const SuiteOptions& options = {});

// `runs` (default 500) random pools, capped and uncapped.
SuiteReport verify_balance(const SuiteOptions& options = {});

/// Fig. 6 pool of 200 sellers, `runs` (default 100) settlement trials with
/// fresh sessions: every tax below 1. Then Pr(tax > 1) at 5, 20 and 80
/// sellers per half (2000 trials each, ledgers resampled from those trials)
/// must not increase.
SuiteReport verify_admissibility(const SuiteOptions& options = {});

}  // namespace bwprio

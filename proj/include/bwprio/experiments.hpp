#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bwprio/config.hpp"
#include "bwprio/engine.hpp"
#include "bwprio/pooling.hpp"

namespace bwprio {

// Long format: one metric per row.
struct ResultRow {
  std::string experiment_id;
  std::string sweep_var;              // "none" outside sweeps
  std::optional<double> sweep_value;
  std::string mechanism;
  std::string metric;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t seed = 0;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  // First row matching; throws std::out_of_range if none.
  const ResultRow& find(std::string_view mechanism, std::string_view metric,
                        std::optional<double> sweep_value = std::nullopt) const;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  unsigned jobs = 1;
};

struct ArmTrace {
  std::string mechanism;
  std::vector<EpochTrace> epochs;
};

struct SimulationResult {
  ResultTable table;
  std::vector<ArmTrace> traces;  // run 0 of each arm
};

/// Monte Carlo over every configured mechanism. All arms share the same
/// worlds (run k uses run_seed(seed, k)), so differences are paired.
SimulationResult simulate(const ExperimentConfig& config, const RunOptions& options = {});

// Config with one sweep point applied. A reserve sweep sets the posted price
// of fixed-price arms and the reserve of the others; a mu sweep only touches
// BKS arms.
ExperimentConfig at_sweep_point(const ExperimentConfig& config, SweepVariable variable,
                                double value);

ResultTable sweep(const ExperimentConfig& config, const SweepConfig& grid,
                  const RunOptions& options = {});

// One seller's accounting-period ledger built from a BKS session.
SellerLedger ledger_of(const SessionOutcome& session, SellerId seller, double reserve);

struct SellerRecord {
  std::size_t trial = 0;
  SellerId seller{};
  std::string type;
  int half = 0;
  double unpooled = 0.0;  // buyers' net BKS payments to this seller
  double pooled = 0.0;    // transfer after settlement
  double tax = 0.0;
};

struct PoolTrialSummary {
  std::size_t trial = 0;
  std::array<double, 2> raw_tax{};
  std::array<double, 2> tax{};
  double center_residual = 0.0;
  double relative_imbalance = 0.0;
};

struct PoolReport {
  ResultTable table;
  std::vector<SellerRecord> sellers;
  std::vector<PoolTrialSummary> trials;
  double max_raw_tax = 0.0;
  double max_relative_imbalance = 0.0;
};

/// Seller j in trial k runs `sessions` sessions, session q with seed
/// derive_seed(seed, Stream::kSeller, (k * sellers + j) * sessions + q), and the
/// seller's ledger collects all of them. The split of trial k draws from
/// make_rng(seed, Stream::kPoolSplit, k).
std::vector<SellerLedger> simulate_pool_ledgers(const ExperimentConfig& config,
                                                const MechanismArm& arm, std::uint64_t seed,
                                                std::size_t trial, unsigned jobs = 1);

PoolReport run_pool(const ExperimentConfig& config, const RunOptions& options = {});

// |buyer total - seller total - center residual| over the money moved.
double relative_imbalance(const PoolSettlement& s);

}  // namespace bwprio

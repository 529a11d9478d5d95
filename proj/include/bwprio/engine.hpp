#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bwprio/demand.hpp"
#include "bwprio/payments.hpp"
#include "bwprio/routing.hpp"
#include "bwprio/stats.hpp"
#include "bwprio/types.hpp"

namespace bwprio {

enum class PaymentRule { kFixedPrice, kVmm, kBks };
enum class RoutingPolicy { kFifo, kFq, kSpq, kThresholdHybrid };

std::string_view to_string(PaymentRule rule);
std::string_view to_string(RoutingPolicy policy);

/// Recipe for a buyer's demand; turned into a realization once per world.
class DemandSpec {
 public:
  using Factory = std::function<DemandRealization(std::uint64_t seed, Epoch horizon)>;

  DemandSpec(std::string label, Factory factory);

  static DemandSpec fixed(DemandRealization realization);
  // Seed and horizon are supplied by the world; params.seed/horizon are ignored.
  static DemandSpec flow_trace(FlowTraceParams params);
  static DemandSpec impatient_flow_trace(FlowTraceParams params, Epoch patience,
                                         double min_bytes);

  DemandRealization materialize(std::uint64_t seed, Epoch horizon) const;
  const std::string& label() const { return label_; }

 private:
  std::string label_;
  Factory factory_;
};

enum class StrategyKind { kGreedy, kPad, kDelay, kMisreport };

std::string_view to_string(StrategyKind kind);

/// How a buyer turns true demand into presented demand. Windows are
/// relative to the buyer's arrival epoch.
struct StrategySpec {
  StrategyKind kind = StrategyKind::kGreedy;
  double bid_factor = 1.0;          // misreport: bid = factor * value
  double pad_amount = 0.0;          // pad: fake KB added per epoch in the window
  std::vector<double> pad_schedule; // pad: explicit per-epoch amounts, overrides pad_amount
  Epoch window_start = 0;
  Epoch window_length = 0;          // pad window, or delay-epochs for delay

  static StrategySpec greedy() { return {}; }
  static StrategySpec pad(double amount, Epoch start, Epoch length);
  static StrategySpec pad_with(std::vector<double> schedule);
  static StrategySpec delay(Epoch epochs, Epoch start = 0);
  static StrategySpec misreport(double factor);

  double padding(Epoch offset) const;
  bool withholding(Epoch offset) const;
};

struct BuyerSpec {
  BuyerId id{};
  double value = 0.0;  // per KB
  DemandSpec demand = DemandSpec::fixed(constant_demand(0.0));
  Epoch arrival = 1;
  Epoch departure = 600;
  StrategySpec strategy;
  std::optional<double> bid_override;

  double bid() const;
};

struct MechanismSpec {
  PaymentRule rule = PaymentRule::kBks;
  double mu = 0.2;
  double reserve = 0.0;  // BKS and VMM eligibility floor
  double price = 0.0;    // fixed price per KB
};

// Lifts one buyer to top priority until it has consumed `bytes` or `deadline` passes.
struct BoostSpec {
  BuyerId buyer{};
  double bytes = 0.0;
  Epoch deadline = 0;
};

struct Scenario {
  std::vector<BuyerSpec> buyers;
  double capacity = 1.0;  // KB per epoch
  RoutingPolicy routing = RoutingPolicy::kSpq;
  std::optional<BoostSpec> boost;
  MechanismSpec mechanism;
  Epoch horizon = 600;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

BoostSpec threshold_hybrid_policy(const Scenario& scenario, BuyerId buyer, double bytes,
                                  Epoch deadline);

/// Every random quantity of one simulated session, fixed up front. Two
/// sessions over the same world differ only through bids and policies.
struct World {
  std::uint64_t seed = 0;
  std::vector<DemandRealization> demands;  // scenario buyer order
  std::vector<ResampleDraw> resample;
  std::uint64_t tie_seed = 0;
};

World make_world(const Scenario& scenario, std::uint64_t seed);

struct SessionOptions {
  bool record_trace = false;
  bool disable_resampling = false;
  bool compute_optimum = false;
};

struct BuyerOutcome {
  BuyerId buyer{};
  double value = 0.0;
  bool eligible = false;
  BidRecord bid;
  double real_bytes = 0.0;    // valued traffic
  double billed_bytes = 0.0;  // real plus padding
  PaymentOutcome payment;
  double realized_value = 0.0;
  double utility = 0.0;
  Epoch settled_at = 0;
};

struct EpochTrace {
  Epoch t = 0;
  std::vector<BuyerId> buyers;
  std::vector<double> true_demand;
  std::vector<double> presented;
  std::vector<double> grants;
  std::vector<double> real;
};

struct OptimumResult {
  double value = 0.0;
  bool exact = true;  // false: lower bound on the optimum
};

struct SessionOutcome {
  std::vector<BuyerOutcome> buyers;
  std::vector<EpochTrace> trace;
  double welfare = 0.0;  // sum of value * real bytes
  double revenue = 0.0;  // sum of net payments
  std::optional<OptimumResult> optimum;
  std::optional<double> efficiency;

  const BuyerOutcome& buyer(BuyerId id) const;
};

SessionOutcome run_session(const Scenario& scenario, std::uint64_t seed,
                           const SessionOptions& options = {});
SessionOutcome run_session(const Scenario& scenario, const World& world,
                           const SessionOptions& options = {});

/// Best total true value over the world's realized demand. Exact per-epoch
/// greedy when every demand is memoryless; otherwise an exhaustive search
/// over per-epoch priority orders, limited to 4 buyers and 60 epochs
/// (std::length_error beyond that).
OptimumResult offline_optimum(const Scenario& scenario, const World& world);

// Greedy-by-value allocation of the realized demand, feasible everywhere.
double greedy_value_bound(const Scenario& scenario, const World& world);

/// Cumulative real bytes, epoch by epoch, of a single buyer facing a fixed
/// sequence of available capacity (capacity[0] is the arrival epoch). Under
/// SPQ this is what a buyer sees, since its grants do not depend on its own use.
std::vector<double> replay_fixed_capacity(const DemandRealization& demand,
                                          std::span<const double> capacity,
                                          const StrategySpec& strategy, Epoch arrival = 1);

struct BuyerSummary {
  BuyerId buyer{};
  Estimate bytes;
  Estimate payment;
  Estimate utility;
};

struct MonteCarloSummary {
  std::size_t runs = 0;
  Estimate welfare;
  Estimate revenue;
  std::vector<BuyerSummary> buyers;
  std::optional<Estimate> efficiency;
};

/// Run k uses seed derive_seed(seed, Stream::kRun, k). Sessions are
/// independent and may run on `jobs` threads; the fold is in run order.
MonteCarloSummary run_monte_carlo(const Scenario& scenario, std::size_t runs, std::uint64_t seed,
                                  unsigned jobs = 1, const SessionOptions& options = {});

std::uint64_t run_seed(std::uint64_t seed, std::size_t run);

}  // namespace bwprio

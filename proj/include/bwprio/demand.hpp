#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bwprio/rng.hpp"
#include "bwprio/types.hpp"

namespace bwprio {

enum class DemandKind {
  kConstant,
  kTimeVarying,
  kBuffered,
  kImpatient,
  kIncreasingRate,
  kIncreasingTotal,
  kFlowTrace,
  kCustom,
};

std::string_view to_string(DemandKind kind);

/// A fixed draw d(t, x) of a buyer's demand model: the number of KB the buyer
/// wants to send in epoch t given that x KB of real traffic were sent before
/// t. Any randomness is resolved when the realization is built, so queries
/// are pure and the object can be shared across threads.
class DemandRealization {
 public:
  using Fn = std::function<double(Epoch, double)>;

  DemandRealization(DemandKind kind, bool memoryless, Fn fn);

  /// Throws std::domain_error for t < 1, negative or non-finite x, or when
  /// the model produces a negative or non-finite value.
  double query(Epoch t, double x) const;

  DemandKind kind() const { return kind_; }

  // Demand does not depend on x at all.
  bool memoryless() const { return memoryless_; }

 private:
  DemandKind kind_;
  bool memoryless_;
  std::shared_ptr<const Fn> fn_;
};

DemandRealization constant_demand(double rate);

// g(t): data that has to be sent in the epoch it is generated.
DemandRealization time_varying_demand(std::function<double(Epoch)> generation);

// generation[p - 1] is the amount produced in epoch p; nothing is produced
// after the end of the sequence. Demand is the unsent backlog, clamped at 0.
DemandRealization buffered_demand(std::vector<double> generation);

/// Sends `rate` until epoch `patience`, then keeps sending only if strictly
/// more than `min_bytes` has been served.
DemandRealization impatient_demand(double rate, Epoch patience, double min_bytes);

// Same cut-off rule applied on top of an arbitrary memoryless base model.
DemandRealization impatient_demand(DemandRealization base, Epoch patience,
                                   double min_bytes);

// d = g(x / t) and d = g(x); g must be weakly increasing and nonnegative.
// Monotonicity is probed on a grid over [0, probe_limit].
DemandRealization increasing_rate_demand(std::function<double(double)> g,
                                         double probe_limit = 1e5);
DemandRealization increasing_total_demand(std::function<double(double)> g,
                                          double probe_limit = 1e6);

struct FlowTraceParams {
  double mean_duration = 30.0;      // epochs
  double stddev_duration = 30.0;    // epochs
  double mean_interarrival = 30.0;  // epochs
  double mean_rate = 10.0;          // KB per epoch, per active flow
  Epoch horizon = 600;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LognormalParams {
  double mu;
  double sigma;
};

// Underlying normal parameters for a lognormal with the given mean/stddev.
LognormalParams lognormal_from_moments(double mean, double stddev);

/// Bursty trace: flows arrive as a Poisson process, live for a lognormal
/// number of epochs and each emits Poisson(mean_rate) KB per epoch. The
/// arrival process starts well before epoch 1 so the trace is stationary
/// from the first epoch. Zero after the horizon.
DemandRealization flow_trace_demand(const FlowTraceParams& params);

// Per-epoch values of a flow trace, epoch 1 at index 0.
std::vector<double> flow_trace_values(const FlowTraceParams& params);

/// Not natural: the buyer stops as soon as it has been served `quota` KB,
/// so extra service now can shrink its total. Used as a negative fixture for
/// the naturalness checker.
DemandRealization quota_giveup_fixture(double rate, double quota);

struct NaturalWitness {
  Epoch t;
  double x;
  double x_prime;
  double capacity;
  double lhs;
  double rhs;
};

struct NaturalReport {
  bool natural = true;
  std::size_t checked = 0;
  std::optional<NaturalWitness> witness;
};

/// Checks x + min(c, d(t,x)) >= x' + min(c, d(t,x')) for every t in
/// [t_first, t_last], every pair x >= x' drawn from x_grid and every c in
/// c_grid. Stops at the first violation.
NaturalReport check_natural(const DemandRealization& d, Epoch t_first, Epoch t_last,
                            std::span<const double> x_grid,
                            std::span<const double> c_grid, double tolerance = 1e-9);

// Same inequality on `triples` random (t, x >= x', c) draws.
NaturalReport check_natural_random(const DemandRealization& d, Epoch t_last,
                                   double x_max, double c_max, std::size_t triples,
                                   Rng& rng, double tolerance = 1e-9);

}  // namespace bwprio

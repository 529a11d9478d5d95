#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "bwprio/rng.hpp"
#include "bwprio/types.hpp"

namespace bwprio {

// What one buyer offers the router in one epoch.
struct EpochRequest {
  BuyerId buyer{};
  double demand = 0.0;    // KB presented this epoch, >= 0
  double priority = 0.0;  // SPQ key (the perturbed bid); ignored by FIFO/FQ
};

/// Capacity granted to each request, in request order.
struct EpochAllocation {
  std::vector<BuyerId> buyers;
  std::vector<double> grants;

  double grant(BuyerId buyer) const;
  double total() const;
};

constexpr double kFillFloor = 1e-9;  // KB of capacity treated as exhausted

// Proportional to presented demand when oversubscribed.
EpochAllocation allocate_fifo(std::span<const EpochRequest> requests, double capacity);

// Max-min fair share by repeated equal splitting of what is left.
EpochAllocation allocate_fq(std::span<const EpochRequest> requests, double capacity);

/// Strict priority by descending key. Exact ties are ordered by a per-buyer
/// key derived from one 64-bit draw of `rng`, so the stream advances by
/// exactly one value per call regardless of how many buyers are present.
EpochAllocation allocate_spq(std::span<const EpochRequest> requests, double capacity, Rng& rng);

// Deterministic core of allocate_spq with the per-epoch tie seed supplied.
EpochAllocation allocate_spq_seeded(std::span<const EpochRequest> requests, double capacity,
                                    std::uint64_t tie_seed);

}  // namespace bwprio

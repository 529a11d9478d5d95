#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bwprio/rng.hpp"
#include "bwprio/stats.hpp"
#include "bwprio/types.hpp"

namespace bwprio {

// A submitted bid after the resampling step. perturbed is the SPQ key.
struct BidRecord {
  BuyerId buyer{};
  double bid = 0.0;      // per KB, >= reserve
  double reserve = 0.0;  // per KB
  double mu = 0.2;       // resampling probability
  bool resampled = false;
  double perturbed = 0.0;  // in [reserve, bid]
};

// The two uniforms consumed by one resampling decision.
struct ResampleDraw {
  double coin = 1.0;   // resample iff coin < mu
  double gamma = 1.0;  // uniform on [0, 1]
};

ResampleDraw draw_resample(Rng& rng);

// r + (b - r) * gamma^(1 / (1 - mu))
double perturbed_bid(double bid, double reserve, double mu, double gamma);

/// Throws std::invalid_argument when bid < reserve, reserve < 0 or mu is
/// outside (0, 1); buyers below reserve never reach the auction.
BidRecord resample_bid(BuyerId buyer, double bid, double reserve, double mu, ResampleDraw draw);
BidRecord resample_bid(BuyerId buyer, double bid, double reserve, double mu, Rng& rng);

// Distribution of the perturbed bid given that resampling happened.
double resampled_bid_cdf(double a, double bid, double reserve, double mu);

struct PaymentOutcome {
  BuyerId buyer{};
  double bytes = 0.0;
  double gross = 0.0;   // bid * bytes
  double rebate = 0.0;  // (1/mu) * bytes * (bid - reserve) when resampled
  double net = 0.0;     // gross - rebate, can be negative
};

PaymentOutcome bks_settle(const BidRecord& record, double bytes);

/// Value-maximal split of one epoch's capacity among linear per-KB bids:
/// highest bid first, with exactly tied bids sharing the marginal capacity
/// max-min fairly. `excluded`, if set, is removed from the market.
std::vector<double> value_max_allocation(std::span<const double> bids,
                                         std::span<const double> demands, double capacity,
                                         std::ptrdiff_t excluded = -1);

/// Per-epoch VCG externality V_{-i} - V*_{-i} for every buyer.
std::vector<double> vmm_epoch_charges(std::span<const double> bids,
                                      std::span<const double> demands, double capacity);

std::vector<bool> fixed_price_eligibility(std::span<const double> bids, double price);
double fixed_price_settle(double bytes, double price);

/// Monte Carlo mean of `run(seed)` over independent derived seeds, with a
/// normal-approximation interval.
Estimate expected_bks_payment(const std::function<double(std::uint64_t)>& run,
                              std::size_t samples, std::uint64_t seed);

}  // namespace bwprio

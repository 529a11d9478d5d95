#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bwprio/rng.hpp"
#include "bwprio/types.hpp"

namespace bwprio {

// One buyer served by a seller during the accounting period.
struct LedgerRow {
  BuyerId buyer{};
  double bytes = 0.0;
  double bid = 0.0;
  double perturbed = 0.0;
  double rebate = 0.0;
};

struct SellerLedger {
  SellerId seller{};
  double reserve = 0.0;
  std::vector<LedgerRow> rows;
};

// First-price revenue at the perturbed bids: sum of bytes * perturbed.
double seller_credit(const SellerLedger& ledger);

double reserve_revenue(const SellerLedger& ledger);       // sum of reserve * bytes
double above_reserve_credit(const SellerLedger& ledger);  // sum of bytes * (perturbed - r)
double above_reserve_payment(const SellerLedger& ledger); // sum of (bid - r) * bytes - rebate
double buyer_payments(const SellerLedger& ledger);        // sum of bid * bytes - rebate

enum class TaxCap { kCapAtOne, kUncapped };

struct PoolHalf {
  std::vector<std::size_t> members;  // indices into the settled ledgers
  double credit = 0.0;               // C_k
  double payment = 0.0;              // T_k
  double deficit = 0.0;              // C_k - T_k
  double raw_tax = 0.0;              // opposing deficit / C_k
  double tax = 0.0;                  // rate actually charged
  double collected = 0.0;            // tax * C_k
  double absorbed = 0.0;             // opposing deficit the center covers
};

struct SellerTransfer {
  SellerId seller{};
  int half = 0;
  double credit = 0.0;   // first-price credit before tax
  double transfer = 0.0; // reserve revenue + (1 - tax) * above-reserve credit
};

struct PoolSettlement {
  std::uint64_t split_seed = 0;
  std::array<PoolHalf, 2> halves;
  std::vector<SellerTransfer> transfers;
  double buyer_total = 0.0;
  double seller_total = 0.0;
  // Buyer payments minus seller transfers. Negative when the center covers
  // a capped tax (or a half with no credit); exactly zero otherwise.
  double center_residual = 0.0;

  bool cap_binding() const;
};

/// Settles one accounting period for sellers sharing a reserve price. The
/// split puts the first floor(n/2) sellers of a seeded shuffle in half 0.
/// Throws std::invalid_argument for fewer than two sellers or mixed reserves.
PoolSettlement settle_pool(std::span<const SellerLedger> ledgers, Rng& rng,
                           TaxCap cap = TaxCap::kCapAtOne);

// Same settlement for an explicit split; half_of[k] is 0 or 1.
PoolSettlement settle_pool_split(std::span<const SellerLedger> ledgers,
                                 std::span<const int> half_of, TaxCap cap = TaxCap::kCapAtOne);

using LedgerSampler = std::function<SellerLedger(Rng&)>;

struct AdmissibilityEstimate {
  std::size_t trials = 0;
  std::size_t exceeded = 0;  // trials where either raw tax rate was above 1
  double max_raw_tax = 0.0;

  double probability() const {
    return trials ? static_cast<double>(exceeded) / static_cast<double>(trials) : 0.0;
  }
};

/// Each trial draws a pool of 2m sellers, seller j from sampler j mod
/// |samplers|, and settles it once.
AdmissibilityEstimate tax_admissibility_estimate(std::span<const LedgerSampler> samplers,
                                                 std::size_t sellers_per_half,
                                                 std::size_t trials, Rng& rng);

}  // namespace bwprio

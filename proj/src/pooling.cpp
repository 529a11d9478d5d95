#include "bwprio/pooling.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace bwprio {

double seller_credit(const SellerLedger& ledger) {
  double sum = 0.0;
  for (const auto& row : ledger.rows) sum += row.bytes * row.perturbed;
  return sum;
}

double reserve_revenue(const SellerLedger& ledger) {
  double sum = 0.0;
  for (const auto& row : ledger.rows) sum += ledger.reserve * row.bytes;
  return sum;
}

double above_reserve_credit(const SellerLedger& ledger) {
  double sum = 0.0;
  for (const auto& row : ledger.rows) sum += row.bytes * (row.perturbed - ledger.reserve);
  return sum;
}

double above_reserve_payment(const SellerLedger& ledger) {
  double sum = 0.0;
  for (const auto& row : ledger.rows) {
    sum += (row.bid - ledger.reserve) * row.bytes - row.rebate;
  }
  return sum;
}

double buyer_payments(const SellerLedger& ledger) {
  double sum = 0.0;
  for (const auto& row : ledger.rows) sum += row.bid * row.bytes - row.rebate;
  return sum;
}

bool PoolSettlement::cap_binding() const {
  return halves[0].absorbed > 0.0 || halves[1].absorbed > 0.0;
}

namespace {

void set_tax(PoolHalf& half, double opposing_deficit, TaxCap cap) {
  if (half.credit == 0.0) {
    // Nothing to tax. A positive opposing deficit is left to the center.
    half.raw_tax = opposing_deficit > 0.0 ? 1.0 : 0.0;
    half.tax = half.raw_tax;
    half.collected = 0.0;
    half.absorbed = std::max(opposing_deficit, 0.0);
    return;
  }
  half.raw_tax = opposing_deficit / half.credit;
  if (cap == TaxCap::kCapAtOne && half.raw_tax > 1.0) {
    half.tax = 1.0;
    half.collected = half.credit;
    half.absorbed = opposing_deficit - half.credit;
  } else {
    half.tax = half.raw_tax;
    half.collected = opposing_deficit;
  }
}

}  // namespace

PoolSettlement settle_pool_split(std::span<const SellerLedger> ledgers,
                                 std::span<const int> half_of, TaxCap cap) {
  if (ledgers.size() < 2) throw std::invalid_argument("a pool needs at least two sellers");
  if (half_of.size() != ledgers.size()) throw std::invalid_argument("split size mismatch");
  const double reserve = ledgers.front().reserve;
  for (const auto& l : ledgers) {
    if (l.reserve != reserve) throw std::invalid_argument("pooled sellers must share a reserve");
  }

  PoolSettlement out;
  for (std::size_t k = 0; k < ledgers.size(); ++k) {
    if (half_of[k] != 0 && half_of[k] != 1) throw std::invalid_argument("split labels are 0/1");
    auto& half = out.halves[static_cast<std::size_t>(half_of[k])];
    half.members.push_back(k);
    half.credit += above_reserve_credit(ledgers[k]);
    half.payment += above_reserve_payment(ledgers[k]);
  }
  for (auto& half : out.halves) half.deficit = half.credit - half.payment;
  set_tax(out.halves[0], out.halves[1].deficit, cap);
  set_tax(out.halves[1], out.halves[0].deficit, cap);

  out.transfers.reserve(ledgers.size());
  for (std::size_t k = 0; k < ledgers.size(); ++k) {
    const auto& half = out.halves[static_cast<std::size_t>(half_of[k])];
    SellerTransfer t;
    t.seller = ledgers[k].seller;
    t.half = half_of[k];
    t.credit = seller_credit(ledgers[k]);
    t.transfer = reserve_revenue(ledgers[k]) + (1.0 - half.tax) * above_reserve_credit(ledgers[k]);
    out.transfers.push_back(t);
    out.buyer_total += buyer_payments(ledgers[k]);
    out.seller_total += t.transfer;
  }
  // Per-half books: each half's tax funds the other half's deficit.
  out.center_residual = (out.halves[0].collected - out.halves[1].deficit) +
                        (out.halves[1].collected - out.halves[0].deficit);
  return out;
}

PoolSettlement settle_pool(std::span<const SellerLedger> ledgers, Rng& rng, TaxCap cap) {
  if (ledgers.size() < 2) throw std::invalid_argument("a pool needs at least two sellers");
  const std::uint64_t split_seed = rng();
  std::vector<std::size_t> order(ledgers.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle(split_seed);
  std::shuffle(order.begin(), order.end(), shuffle);
  std::vector<int> half_of(ledgers.size(), 1);
  for (std::size_t k = 0; k < ledgers.size() / 2; ++k) half_of[order[k]] = 0;
  auto out = settle_pool_split(ledgers, half_of, cap);
  out.split_seed = split_seed;
  return out;
}

AdmissibilityEstimate tax_admissibility_estimate(std::span<const LedgerSampler> samplers,
                                                 std::size_t sellers_per_half,
                                                 std::size_t trials, Rng& rng) {
  if (samplers.empty()) throw std::invalid_argument("need at least one seller distribution");
  if (sellers_per_half < 1) throw std::invalid_argument("need at least one seller per half");
  AdmissibilityEstimate est;
  std::vector<SellerLedger> pool(2 * sellers_per_half);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    for (std::size_t j = 0; j < pool.size(); ++j) {
      pool[j] = samplers[j % samplers.size()](rng);
      pool[j].seller = static_cast<SellerId>(j);
    }
    const auto s = settle_pool(pool, rng);
    const double worst = std::max(s.halves[0].raw_tax, s.halves[1].raw_tax);
    est.max_raw_tax = trial == 0 ? worst : std::max(est.max_raw_tax, worst);
    if (worst > 1.0) ++est.exceeded;
    ++est.trials;
  }
  return est;
}

}  // namespace bwprio

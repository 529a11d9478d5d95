#include "bwprio/payments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bwprio {

ResampleDraw draw_resample(Rng& rng) {
  ResampleDraw d;
  d.coin = uniform01(rng);
  d.gamma = uniform01(rng);
  return d;
}

double perturbed_bid(double bid, double reserve, double mu, double gamma) {
  return reserve + (bid - reserve) * std::pow(gamma, 1.0 / (1.0 - mu));
}

BidRecord resample_bid(BuyerId buyer, double bid, double reserve, double mu, ResampleDraw draw) {
  if (!(reserve >= 0.0)) throw std::invalid_argument("reserve price must be >= 0");
  if (!(bid >= reserve)) throw std::invalid_argument("bid is below the reserve price");
  if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("mu must lie in (0, 1)");
  BidRecord rec{buyer, bid, reserve, mu, false, bid};
  if (draw.coin < mu) {
    rec.resampled = true;
    rec.perturbed = perturbed_bid(bid, reserve, mu, std::clamp(draw.gamma, 0.0, 1.0));
  }
  return rec;
}

BidRecord resample_bid(BuyerId buyer, double bid, double reserve, double mu, Rng& rng) {
  return resample_bid(buyer, bid, reserve, mu, draw_resample(rng));
}

double resampled_bid_cdf(double a, double bid, double reserve, double mu) {
  if (bid <= reserve) return a >= reserve ? 1.0 : 0.0;
  if (a <= reserve) return 0.0;
  if (a >= bid) return 1.0;
  // P(gamma^(1/(1-mu)) <= z) = z^(1-mu)
  return std::pow((a - reserve) / (bid - reserve), 1.0 - mu);
}

PaymentOutcome bks_settle(const BidRecord& record, double bytes) {
  if (!(bytes >= 0.0)) throw std::invalid_argument("settled bytes must be >= 0");
  PaymentOutcome out{record.buyer, bytes, record.bid * bytes, 0.0, 0.0};
  if (record.resampled) out.rebate = bytes * (record.bid - record.reserve) / record.mu;
  out.net = out.gross - out.rebate;
  return out;
}

std::vector<double> value_max_allocation(std::span<const double> bids,
                                         std::span<const double> demands, double capacity,
                                         std::ptrdiff_t excluded) {
  if (bids.size() != demands.size()) throw std::invalid_argument("bids/demands size mismatch");
  const std::size_t n = bids.size();
  std::vector<double> alloc(n, 0.0);
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < n; ++k) {
    if (static_cast<std::ptrdiff_t>(k) != excluded) order.push_back(k);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return bids[a] > bids[b]; });
  double remaining = capacity;
  for (std::size_t lo = 0; lo < order.size() && remaining > 0.0;) {
    std::size_t hi = lo;
    double group = 0.0;
    while (hi < order.size() && bids[order[hi]] == bids[order[lo]]) group += demands[order[hi++]];
    if (group <= remaining) {
      for (std::size_t k = lo; k < hi; ++k) alloc[order[k]] = demands[order[k]];
      remaining -= group;
    } else {
      // Water-fill the tied group.
      std::vector<std::size_t> open(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                    order.begin() + static_cast<std::ptrdiff_t>(hi));
      while (!open.empty() && remaining > 0.0) {
        const double share = remaining / static_cast<double>(open.size());
        std::vector<std::size_t> next;
        for (auto k : open) {
          const double give = std::min(share, demands[k] - alloc[k]);
          alloc[k] += give;
          remaining -= give;
          if (alloc[k] < demands[k]) next.push_back(k);
        }
        if (next.size() == open.size()) break;
        open = std::move(next);
      }
      remaining = 0.0;
    }
    lo = hi;
  }
  return alloc;
}

std::vector<double> vmm_epoch_charges(std::span<const double> bids,
                                      std::span<const double> demands, double capacity) {
  const auto with_all = value_max_allocation(bids, demands, capacity);
  const double total = std::inner_product(bids.begin(), bids.end(), with_all.begin(), 0.0);
  std::vector<double> charges(bids.size(), 0.0);
  for (std::size_t i = 0; i < bids.size(); ++i) {
    if (with_all[i] <= 0.0) continue;  // took nothing, displaced nothing
    const auto without = value_max_allocation(bids, demands, capacity,
                                              static_cast<std::ptrdiff_t>(i));
    const double v_without = std::inner_product(bids.begin(), bids.end(), without.begin(), 0.0);
    const double v_others = total - bids[i] * with_all[i];
    charges[i] = std::max(0.0, v_without - v_others);
  }
  return charges;
}

std::vector<bool> fixed_price_eligibility(std::span<const double> bids, double price) {
  if (!(price >= 0.0)) throw std::invalid_argument("posted price must be >= 0");
  std::vector<bool> out(bids.size());
  for (std::size_t k = 0; k < bids.size(); ++k) out[k] = bids[k] >= price;
  return out;
}

double fixed_price_settle(double bytes, double price) { return bytes * price; }

Estimate expected_bks_payment(const std::function<double(std::uint64_t)>& run,
                              std::size_t samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("need at least one sample");
  RunningStats stats;
  for (std::size_t k = 0; k < samples; ++k) stats.add(run(derive_seed(seed, Stream::kRun, k)));
  return stats.estimate();
}

}  // namespace bwprio

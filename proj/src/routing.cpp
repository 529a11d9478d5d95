#include "bwprio/routing.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace bwprio {

double EpochAllocation::grant(BuyerId buyer) const {
  for (std::size_t k = 0; k < buyers.size(); ++k) {
    if (buyers[k] == buyer) return grants[k];
  }
  return 0.0;
}

double EpochAllocation::total() const {
  return std::accumulate(grants.begin(), grants.end(), 0.0);
}

namespace {

EpochAllocation empty_for(std::span<const EpochRequest> requests, double capacity) {
  if (!(capacity >= 0.0)) throw std::invalid_argument("router capacity must be >= 0");
  EpochAllocation out;
  out.buyers.reserve(requests.size());
  for (const auto& r : requests) {
    if (!(r.demand >= 0.0)) throw std::invalid_argument("presented demand must be >= 0");
    out.buyers.push_back(r.buyer);
  }
  out.grants.assign(requests.size(), 0.0);
  return out;
}

}  // namespace

EpochAllocation allocate_fifo(std::span<const EpochRequest> requests, double capacity) {
  auto out = empty_for(requests, capacity);
  double total = 0.0;
  for (const auto& r : requests) total += r.demand;
  if (total == 0.0) return out;
  const bool fits = total <= capacity;
  for (std::size_t k = 0; k < requests.size(); ++k) {
    out.grants[k] = fits ? requests[k].demand : capacity * requests[k].demand / total;
  }
  return out;
}

EpochAllocation allocate_fq(std::span<const EpochRequest> requests, double capacity) {
  auto out = empty_for(requests, capacity);
  std::vector<std::size_t> open;
  for (std::size_t k = 0; k < requests.size(); ++k) {
    if (requests[k].demand > 0.0) open.push_back(k);
  }
  double remaining = capacity;
  while (!open.empty() && remaining >= kFillFloor) {
    const double share = remaining / static_cast<double>(open.size());
    std::vector<std::size_t> still_open;
    for (auto k : open) {
      const double want = requests[k].demand - out.grants[k];
      const double give = std::min(share, want);
      out.grants[k] += give;
      remaining -= give;
      if (give < want) still_open.push_back(k);
    }
    if (still_open.size() == open.size()) break;  // every buyer took a full share
    open = std::move(still_open);
  }
  return out;
}

EpochAllocation allocate_spq_seeded(std::span<const EpochRequest> requests, double capacity,
                                    std::uint64_t tie_seed) {
  auto out = empty_for(requests, capacity);
  std::vector<std::size_t> order(requests.size());
  std::iota(order.begin(), order.end(), 0);
  auto tie_key = [tie_seed](BuyerId id) {
    return splitmix64(tie_seed ^ splitmix64(static_cast<std::uint64_t>(to_int(id))));
  };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (requests[a].priority != requests[b].priority) {
      return requests[a].priority > requests[b].priority;
    }
    return tie_key(requests[a].buyer) < tie_key(requests[b].buyer);
  });
  double remaining = capacity;
  for (auto k : order) {
    const double give = std::min(remaining, requests[k].demand);
    out.grants[k] = give;
    remaining -= give;
  }
  return out;
}

EpochAllocation allocate_spq(std::span<const EpochRequest> requests, double capacity, Rng& rng) {
  return allocate_spq_seeded(requests, capacity, rng());
}

}  // namespace bwprio

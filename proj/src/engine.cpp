#include "bwprio/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

namespace bwprio {

std::string_view to_string(PaymentRule rule) {
  switch (rule) {
    case PaymentRule::kFixedPrice: return "fixed";
    case PaymentRule::kVmm: return "vmm";
    case PaymentRule::kBks: return "bks";
  }
  return "unknown";
}

std::string_view to_string(RoutingPolicy policy) {
  switch (policy) {
    case RoutingPolicy::kFifo: return "fifo";
    case RoutingPolicy::kFq: return "fq";
    case RoutingPolicy::kSpq: return "spq";
    case RoutingPolicy::kThresholdHybrid: return "hybrid";
  }
  return "unknown";
}

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kGreedy: return "greedy";
    case StrategyKind::kPad: return "pad";
    case StrategyKind::kDelay: return "delay";
    case StrategyKind::kMisreport: return "misreport";
  }
  return "unknown";
}

DemandSpec::DemandSpec(std::string label, Factory factory)
    : label_(std::move(label)), factory_(std::move(factory)) {
  if (!factory_) throw std::invalid_argument("demand spec needs a factory");
}

DemandSpec DemandSpec::fixed(DemandRealization realization) {
  std::string label(to_string(realization.kind()));
  return {std::move(label),
          [r = std::move(realization)](std::uint64_t, Epoch) { return r; }};
}

DemandSpec DemandSpec::flow_trace(FlowTraceParams params) {
  params.validate();
  return {"flow_trace", [params](std::uint64_t seed, Epoch horizon) {
            auto p = params;
            p.seed = seed;
            p.horizon = horizon;
            return flow_trace_demand(p);
          }};
}

DemandSpec DemandSpec::impatient_flow_trace(FlowTraceParams params, Epoch patience,
                                            double min_bytes) {
  params.validate();
  // Fail early on bad thresholds rather than at materialization.
  (void)impatient_demand(constant_demand(0.0), patience, min_bytes);
  return {"impatient_flow_trace", [params, patience, min_bytes](std::uint64_t seed, Epoch horizon) {
            auto p = params;
            p.seed = seed;
            p.horizon = horizon;
            return impatient_demand(flow_trace_demand(p), patience, min_bytes);
          }};
}

DemandRealization DemandSpec::materialize(std::uint64_t seed, Epoch horizon) const {
  return factory_(seed, horizon);
}

StrategySpec StrategySpec::pad(double amount, Epoch start, Epoch length) {
  if (!(amount >= 0.0) || start < 0 || length < 0) {
    throw std::invalid_argument("pad schedule must be nonnegative");
  }
  StrategySpec s;
  s.kind = StrategyKind::kPad;
  s.pad_amount = amount;
  s.window_start = start;
  s.window_length = length;
  return s;
}

StrategySpec StrategySpec::pad_with(std::vector<double> schedule) {
  for (double v : schedule) {
    if (!(v >= 0.0)) throw std::invalid_argument("pad schedule must be nonnegative");
  }
  StrategySpec s;
  s.kind = StrategyKind::kPad;
  s.pad_schedule = std::move(schedule);
  return s;
}

StrategySpec StrategySpec::delay(Epoch epochs, Epoch start) {
  if (epochs < 0 || start < 0) throw std::invalid_argument("delay must be nonnegative");
  StrategySpec s;
  s.kind = StrategyKind::kDelay;
  s.window_start = start;
  s.window_length = epochs;
  return s;
}

StrategySpec StrategySpec::misreport(double factor) {
  if (!(factor >= 0.0)) throw std::invalid_argument("bid factor must be >= 0");
  StrategySpec s;
  s.kind = StrategyKind::kMisreport;
  s.bid_factor = factor;
  return s;
}

double StrategySpec::padding(Epoch offset) const {
  if (kind != StrategyKind::kPad) return 0.0;
  if (!pad_schedule.empty()) {
    const auto idx = static_cast<std::size_t>(offset);
    return idx < pad_schedule.size() ? pad_schedule[idx] : 0.0;
  }
  return offset >= window_start && offset < window_start + window_length ? pad_amount : 0.0;
}

bool StrategySpec::withholding(Epoch offset) const {
  return kind == StrategyKind::kDelay && offset >= window_start &&
         offset < window_start + window_length;
}

double BuyerSpec::bid() const {
  if (bid_override) return *bid_override;
  return strategy.kind == StrategyKind::kMisreport ? value * strategy.bid_factor : value;
}

void Scenario::validate() const {
  if (buyers.empty()) throw std::invalid_argument("scenario has no buyers");
  if (!(capacity > 0.0) || !std::isfinite(capacity)) {
    throw std::invalid_argument("seller capacity must be > 0");
  }
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1 epoch");
  std::set<std::int32_t> ids;
  for (const auto& b : buyers) {
    if (!ids.insert(to_int(b.id)).second) {
      throw std::invalid_argument("duplicate buyer id " + to_string(b.id));
    }
    if (!(b.value >= 0.0)) throw std::invalid_argument("buyer " + to_string(b.id) + ": value < 0");
    if (b.arrival < 0 || b.departure < b.arrival) {
      throw std::invalid_argument("buyer " + to_string(b.id) + ": need 0 <= arrival <= departure");
    }
    if (!(b.bid() >= 0.0)) throw std::invalid_argument("buyer " + to_string(b.id) + ": bid < 0");
  }
  if (mechanism.rule == PaymentRule::kBks && !(mechanism.mu > 0.0 && mechanism.mu < 1.0)) {
    throw std::invalid_argument("mu must lie in (0, 1)");
  }
  if (!(mechanism.reserve >= 0.0)) throw std::invalid_argument("reserve must be >= 0");
  if (!(mechanism.price >= 0.0)) throw std::invalid_argument("fixed price must be >= 0");
  if (routing == RoutingPolicy::kThresholdHybrid) {
    if (!boost) throw std::invalid_argument("threshold-hybrid routing needs boost parameters");
    if (!ids.contains(to_int(boost->buyer))) {
      throw std::invalid_argument("boost names unknown buyer " + to_string(boost->buyer));
    }
  }
}

BoostSpec threshold_hybrid_policy(const Scenario& scenario, BuyerId buyer, double bytes,
                                  Epoch deadline) {
  if (!(bytes >= 0.0) || deadline < 0) throw std::invalid_argument("boost parameters must be >= 0");
  const bool known = std::any_of(scenario.buyers.begin(), scenario.buyers.end(),
                                 [&](const BuyerSpec& b) { return b.id == buyer; });
  if (!known) throw std::invalid_argument("boost names unknown buyer " + to_string(buyer));
  return {buyer, bytes, deadline};
}

const BuyerOutcome& SessionOutcome::buyer(BuyerId id) const {
  for (const auto& b : buyers) {
    if (b.buyer == id) return b;
  }
  throw std::out_of_range("no outcome for buyer " + to_string(id));
}

std::uint64_t run_seed(std::uint64_t seed, std::size_t run) {
  return derive_seed(seed, Stream::kRun, run);
}

World make_world(const Scenario& scenario, std::uint64_t seed) {
  World w;
  w.seed = seed;
  w.tie_seed = derive_seed(seed, Stream::kTieBreak);
  for (const auto& b : scenario.buyers) {
    const auto key = static_cast<std::uint64_t>(to_int(b.id));
    w.demands.push_back(b.demand.materialize(derive_seed(seed, Stream::kDemand, key),
                                             scenario.horizon));
    auto rng = make_rng(seed, Stream::kResample, key);
    w.resample.push_back(draw_resample(rng));
  }
  return w;
}

namespace {

bool eligible_for(const MechanismSpec& m, double bid) {
  return m.rule == PaymentRule::kFixedPrice ? bid >= m.price : bid >= m.reserve;
}

EpochAllocation route(RoutingPolicy policy, std::span<const EpochRequest> requests,
                      double capacity, std::uint64_t tie_seed) {
  switch (policy) {
    case RoutingPolicy::kFifo: return allocate_fifo(requests, capacity);
    case RoutingPolicy::kFq: return allocate_fq(requests, capacity);
    case RoutingPolicy::kSpq:
    case RoutingPolicy::kThresholdHybrid: return allocate_spq_seeded(requests, capacity, tie_seed);
  }
  throw std::logic_error("unhandled routing policy");
}

double query_with_context(const DemandRealization& d, Epoch t, double x, BuyerId id) {
  try {
    return d.query(t, x);
  } catch (const std::exception& e) {
    throw std::runtime_error("buyer " + to_string(id) + ", epoch " + std::to_string(t) + ": " +
                             e.what());
  }
}

}  // namespace

SessionOutcome run_session(const Scenario& scenario, std::uint64_t seed,
                           const SessionOptions& options) {
  return run_session(scenario, make_world(scenario, seed), options);
}

SessionOutcome run_session(const Scenario& scenario, const World& world,
                           const SessionOptions& options) {
  scenario.validate();
  const auto& mech = scenario.mechanism;
  const std::size_t n = scenario.buyers.size();
  if (world.demands.size() != n || world.resample.size() != n) {
    throw std::invalid_argument("world does not match scenario");
  }

  SessionOutcome out;
  out.buyers.resize(n);
  std::vector<double> vmm_charges(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& spec = scenario.buyers[k];
    auto& b = out.buyers[k];
    b.buyer = spec.id;
    b.value = spec.value;
    const double bid = spec.bid();
    b.eligible = eligible_for(mech, bid);
    b.bid = BidRecord{spec.id, bid, mech.reserve, mech.mu, false, bid};
    if (b.eligible && mech.rule == PaymentRule::kBks && !options.disable_resampling) {
      b.bid = resample_bid(spec.id, bid, mech.reserve, mech.mu, world.resample[k]);
    }
  }

  Rng ties(world.tie_seed);
  std::vector<std::size_t> active;
  std::vector<EpochRequest> requests;
  std::vector<double> true_demand;
  std::vector<double> bids;
  std::vector<double> presented;
  for (Epoch t = 1; t <= scenario.horizon; ++t) {
    const std::uint64_t tie_seed = ties();
    active.clear();
    requests.clear();
    true_demand.clear();
    for (std::size_t k = 0; k < n; ++k) {
      const auto& spec = scenario.buyers[k];
      if (!out.buyers[k].eligible || t < spec.arrival || t > spec.departure) continue;
      const Epoch offset = t - spec.arrival;
      const double d =
          query_with_context(world.demands[k], t, out.buyers[k].real_bytes, spec.id);
      double shown = spec.strategy.withholding(offset) ? 0.0 : d;
      shown += spec.strategy.padding(offset);
      double priority = out.buyers[k].bid.perturbed;
      if (scenario.routing == RoutingPolicy::kThresholdHybrid && scenario.boost &&
          scenario.boost->buyer == spec.id && t <= scenario.boost->deadline &&
          out.buyers[k].billed_bytes < scenario.boost->bytes) {
        priority = std::numeric_limits<double>::infinity();
      }
      active.push_back(k);
      true_demand.push_back(spec.strategy.withholding(offset) ? 0.0 : d);
      requests.push_back({spec.id, shown, priority});
    }
    if (active.empty()) continue;

    const auto alloc = route(scenario.routing, requests, scenario.capacity, tie_seed);
    EpochTrace row;
    if (options.record_trace) {
      row.t = t;
      row.buyers = alloc.buyers;
    }
    for (std::size_t j = 0; j < active.size(); ++j) {
      auto& b = out.buyers[active[j]];
      const double g = alloc.grants[j];
      const double real = std::min(g, true_demand[j]);
      b.billed_bytes += g;
      b.real_bytes += real;
      if (options.record_trace) {
        row.true_demand.push_back(true_demand[j]);
        row.presented.push_back(requests[j].demand);
        row.grants.push_back(g);
        row.real.push_back(real);
      }
    }
    if (mech.rule == PaymentRule::kVmm) {
      bids.clear();
      presented.clear();
      for (std::size_t j = 0; j < active.size(); ++j) {
        bids.push_back(out.buyers[active[j]].bid.bid);
        presented.push_back(requests[j].demand);
      }
      const auto charges = vmm_epoch_charges(bids, presented, scenario.capacity);
      for (std::size_t j = 0; j < active.size(); ++j) vmm_charges[active[j]] += charges[j];
    }
    if (options.record_trace) out.trace.push_back(std::move(row));
  }

  // Rebates depend only on each buyer's own total, so settling after the loop
  // is the same as settling at each departure.
  for (std::size_t k = 0; k < n; ++k) {
    auto& b = out.buyers[k];
    const auto& spec = scenario.buyers[k];
    b.settled_at = std::min(spec.departure, scenario.horizon);
    b.payment = PaymentOutcome{spec.id, b.billed_bytes, 0.0, 0.0, 0.0};
    if (b.eligible) {
      switch (mech.rule) {
        case PaymentRule::kBks: b.payment = bks_settle(b.bid, b.billed_bytes); break;
        case PaymentRule::kVmm:
          b.payment.gross = vmm_charges[k];
          b.payment.net = vmm_charges[k];
          break;
        case PaymentRule::kFixedPrice:
          b.payment.gross = fixed_price_settle(b.billed_bytes, mech.price);
          b.payment.net = b.payment.gross;
          break;
      }
    }
    b.realized_value = spec.value * b.real_bytes;
    b.utility = b.realized_value - b.payment.net;
    out.welfare += b.realized_value;
    out.revenue += b.payment.net;
  }

  if (options.compute_optimum) {
    try {
      out.optimum = offline_optimum(scenario, world);
    } catch (const std::length_error&) {
      out.optimum = OptimumResult{greedy_value_bound(scenario, world), false};
    }
    out.efficiency = out.optimum->value > 0.0 ? out.welfare / out.optimum->value : 1.0;
  }
  return out;
}

namespace {

bool active_at(const BuyerSpec& b, Epoch t) { return t >= b.arrival && t <= b.departure; }

// Strict-priority fill of one epoch in the given order.
void fill_in_order(std::span<const std::size_t> order, std::span<const double> demand,
                   double capacity, std::span<double> grants) {
  double remaining = capacity;
  for (auto k : order) {
    grants[k] = std::min(remaining, demand[k]);
    remaining -= grants[k];
  }
}

}  // namespace

double greedy_value_bound(const Scenario& scenario, const World& world) {
  Scenario by_value = scenario;
  by_value.routing = RoutingPolicy::kSpq;
  by_value.boost.reset();
  by_value.mechanism = MechanismSpec{PaymentRule::kFixedPrice, scenario.mechanism.mu, 0.0, 0.0};
  for (auto& b : by_value.buyers) {
    b.bid_override = b.value;
    b.strategy = StrategySpec::greedy();
  }
  return run_session(by_value, world).welfare;
}

OptimumResult offline_optimum(const Scenario& scenario, const World& world) {
  scenario.validate();
  const std::size_t n = scenario.buyers.size();
  const bool memoryless = std::all_of(world.demands.begin(), world.demands.end(),
                                      [](const DemandRealization& d) { return d.memoryless(); });
  std::vector<double> values;
  for (const auto& b : scenario.buyers) values.push_back(b.value);

  if (memoryless) {
    double total = 0.0;
    std::vector<double> demand(n);
    for (Epoch t = 1; t <= scenario.horizon; ++t) {
      for (std::size_t k = 0; k < n; ++k) {
        demand[k] = active_at(scenario.buyers[k], t) ? world.demands[k].query(t, 0.0) : 0.0;
      }
      const auto alloc = value_max_allocation(values, demand, scenario.capacity);
      total += std::inner_product(values.begin(), values.end(), alloc.begin(), 0.0);
    }
    return {total, true};
  }

  constexpr std::size_t kMaxBuyers = 4;
  constexpr Epoch kMaxEpochs = 60;
  constexpr std::size_t kMaxStates = 2'000'000;
  if (n > kMaxBuyers || scenario.horizon > kMaxEpochs) {
    throw std::length_error("instance too large for the priority-order search");
  }

  // Value is a function of the cumulative vector, so states dedupe on it.
  using Key = std::vector<long long>;
  auto key_of = [](const std::vector<double>& x) {
    Key key(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) key[k] = std::llround(x[k] * 1e6);
    return key;
  };
  std::map<Key, std::vector<double>> states;
  states.emplace(Key(n, 0), std::vector<double>(n, 0.0));
  std::vector<double> demand(n);
  std::vector<double> grants(n);
  for (Epoch t = 1; t <= scenario.horizon; ++t) {
    std::vector<std::size_t> order;
    for (std::size_t k = 0; k < n; ++k) {
      if (active_at(scenario.buyers[k], t)) order.push_back(k);
    }
    if (order.empty()) continue;
    std::map<Key, std::vector<double>> next;
    for (const auto& [key, x] : states) {
      for (std::size_t k = 0; k < n; ++k) demand[k] = world.demands[k].query(t, x[k]);
      std::sort(order.begin(), order.end());
      do {
        std::fill(grants.begin(), grants.end(), 0.0);
        fill_in_order(order, demand, scenario.capacity, grants);
        auto y = x;
        for (std::size_t k = 0; k < n; ++k) y[k] += grants[k];
        next.emplace(key_of(y), std::move(y));
      } while (std::next_permutation(order.begin(), order.end()));
      if (next.size() > kMaxStates) throw std::length_error("priority-order search state limit");
    }
    states = std::move(next);
  }
  double best = 0.0;
  for (const auto& [key, x] : states) {
    best = std::max(best, std::inner_product(values.begin(), values.end(), x.begin(), 0.0));
  }
  return {best, true};
}

std::vector<double> replay_fixed_capacity(const DemandRealization& demand,
                                          std::span<const double> capacity,
                                          const StrategySpec& strategy, Epoch arrival) {
  std::vector<double> cumulative;
  cumulative.reserve(capacity.size());
  double x = 0.0;
  for (std::size_t k = 0; k < capacity.size(); ++k) {
    const auto offset = static_cast<Epoch>(k);
    const double d = demand.query(arrival + offset, x);
    const double real_demand = strategy.withholding(offset) ? 0.0 : d;
    const double grant = std::min(capacity[k], real_demand + strategy.padding(offset));
    x += std::min(grant, real_demand);
    cumulative.push_back(x);
  }
  return cumulative;
}

MonteCarloSummary run_monte_carlo(const Scenario& scenario, std::size_t runs, std::uint64_t seed,
                                  unsigned jobs, const SessionOptions& options) {
  if (runs < 1) throw std::invalid_argument("need at least one run");
  scenario.validate();
  const std::size_t n = scenario.buyers.size();
  // Per run: welfare, revenue, efficiency, then bytes/payment/utility per buyer.
  const std::size_t width = 3 + 3 * n;
  std::vector<double> metrics(runs * width, 0.0);

  auto work = [&](std::size_t first, std::size_t step) {
    for (std::size_t r = first; r < runs; r += step) {
      const auto s = run_session(scenario, run_seed(seed, r), options);
      double* m = &metrics[r * width];
      m[0] = s.welfare;
      m[1] = s.revenue;
      m[2] = s.efficiency.value_or(0.0);
      for (std::size_t k = 0; k < n; ++k) {
        m[3 + 3 * k] = s.buyers[k].real_bytes;
        m[4 + 3 * k] = s.buyers[k].payment.net;
        m[5 + 3 * k] = s.buyers[k].utility;
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(runs)));
  if (jobs == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(work, j, jobs);
  }

  std::vector<RunningStats> stats(width);
  for (std::size_t r = 0; r < runs; ++r) {
    for (std::size_t c = 0; c < width; ++c) stats[c].add(metrics[r * width + c]);
  }
  MonteCarloSummary out;
  out.runs = runs;
  out.welfare = stats[0].estimate();
  out.revenue = stats[1].estimate();
  if (options.compute_optimum) out.efficiency = stats[2].estimate();
  for (std::size_t k = 0; k < n; ++k) {
    out.buyers.push_back({scenario.buyers[k].id, stats[3 + 3 * k].estimate(),
                          stats[4 + 3 * k].estimate(), stats[5 + 3 * k].estimate()});
  }
  return out;
}

}  // namespace bwprio

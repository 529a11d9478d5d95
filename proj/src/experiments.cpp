#include "bwprio/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace bwprio {

const ResultRow& ResultTable::find(std::string_view mechanism, std::string_view metric,
                                   std::optional<double> sweep_value) const {
  for (const auto& r : rows) {
    if (r.mechanism == mechanism && r.metric == metric &&
        (!sweep_value || (r.sweep_value && *r.sweep_value == *sweep_value))) {
      return r;
    }
  }
  throw std::out_of_range("no result row for " + std::string(mechanism) + "/" +
                          std::string(metric));
}

namespace {

ResultRow row_of(const ExperimentConfig& c, std::uint64_t seed, const std::string& sweep_var,
                 std::optional<double> sweep_value, const std::string& mechanism,
                 std::string metric, const Estimate& e) {
  return {c.experiment_id, sweep_var, sweep_value, mechanism, std::move(metric),
          e.mean,          e.ci_low(), e.ci_high(),  seed};
}

ResultRow exact_row(const ExperimentConfig& c, std::uint64_t seed, const std::string& sweep_var,
                    std::optional<double> sweep_value, const std::string& mechanism,
                    std::string metric, double v) {
  return {c.experiment_id, sweep_var, sweep_value, mechanism, std::move(metric), v, v, v, seed};
}

void append_arm_rows(ResultTable& table, const ExperimentConfig& c, std::uint64_t seed,
                     const std::string& sweep_var, std::optional<double> sweep_value,
                     const std::string& arm, const MonteCarloSummary& mc) {
  table.rows.push_back(row_of(c, seed, sweep_var, sweep_value, arm, "welfare", mc.welfare));
  table.rows.push_back(row_of(c, seed, sweep_var, sweep_value, arm, "revenue", mc.revenue));
  if (mc.efficiency) {
    table.rows.push_back(row_of(c, seed, sweep_var, sweep_value, arm, "efficiency", *mc.efficiency));
  }
  for (const auto& b : mc.buyers) {
    const std::string p = "buyer" + to_string(b.buyer) + ".";
    table.rows.push_back(row_of(c, seed, sweep_var, sweep_value, arm, p + "bytes", b.bytes));
    table.rows.push_back(row_of(c, seed, sweep_var, sweep_value, arm, p + "payment", b.payment));
    table.rows.push_back(row_of(c, seed, sweep_var, sweep_value, arm, p + "utility", b.utility));
  }
}

}  // namespace

SimulationResult simulate(const ExperimentConfig& config, const RunOptions& options) {
  const auto seed = options.seed.value_or(config.seed);
  const auto runs = options.runs.value_or(config.runs);
  SimulationResult out;
  SessionOptions session;
  session.compute_optimum = config.optimum;
  for (const auto& arm : config.mechanisms) {
    const auto scenario = config.scenario(arm);
    const auto mc = run_monte_carlo(scenario, runs, seed, options.jobs, session);
    append_arm_rows(out.table, config, seed, "none", std::nullopt, arm.name, mc);
    SessionOptions traced;
    traced.record_trace = true;
    out.traces.push_back({arm.name, run_session(scenario, run_seed(seed, 0), traced).trace});
  }
  return out;
}

ExperimentConfig at_sweep_point(const ExperimentConfig& config, SweepVariable variable,
                                double value) {
  auto c = config;
  switch (variable) {
    case SweepVariable::kCapacity:
      if (!(value > 0.0)) throw std::invalid_argument("capacity must be > 0");
      c.capacity = value;
      break;
    case SweepVariable::kReserve:
      if (!(value >= 0.0)) throw std::invalid_argument("reserve must be >= 0");
      for (auto& a : c.mechanisms) {
        if (a.rule == PaymentRule::kFixedPrice) {
          a.price = value;
        } else {
          a.reserve = value;
        }
      }
      break;
    case SweepVariable::kMu:
      if (!(value > 0.0 && value < 1.0)) throw std::invalid_argument("mu must lie in (0, 1)");
      for (auto& a : c.mechanisms) {
        if (a.rule == PaymentRule::kBks) a.mu = value;
      }
      break;
  }
  return c;
}

ResultTable sweep(const ExperimentConfig& config, const SweepConfig& grid,
                  const RunOptions& options) {
  if (grid.values.empty()) throw std::invalid_argument("sweep grid is empty");
  const auto seed = options.seed.value_or(config.seed);
  const auto runs = options.runs.value_or(config.runs);
  const std::string var(to_string(grid.variable));
  SessionOptions session;
  session.compute_optimum = config.optimum;
  ResultTable out;
  for (double v : grid.values) {
    const auto point = at_sweep_point(config, grid.variable, v);
    for (const auto& arm : point.mechanisms) {
      const auto mc = run_monte_carlo(point.scenario(arm), runs, seed, options.jobs, session);
      append_arm_rows(out, point, seed, var, v, arm.name, mc);
    }
  }
  return out;
}

SellerLedger ledger_of(const SessionOutcome& session, SellerId seller, double reserve) {
  SellerLedger l{seller, reserve, {}};
  for (const auto& b : session.buyers) {
    if (!b.eligible) continue;
    l.rows.push_back({b.buyer, b.billed_bytes, b.bid.bid, b.bid.perturbed, b.payment.rebate});
  }
  return l;
}

double relative_imbalance(const PoolSettlement& s) {
  double scale = std::abs(s.buyer_total) + std::abs(s.center_residual);
  for (const auto& t : s.transfers) scale += std::abs(t.transfer);
  scale = std::max(scale, 1.0);
  return std::abs(s.buyer_total - s.seller_total - s.center_residual) / scale;
}

std::vector<SellerLedger> simulate_pool_ledgers(const ExperimentConfig& config,
                                                const MechanismArm& arm, std::uint64_t seed,
                                                std::size_t trial, unsigned jobs) {
  if (!config.pool) throw std::invalid_argument("config has no pool block");
  if (arm.rule != PaymentRule::kBks) throw std::invalid_argument("pooling settles BKS sessions");
  std::vector<const SellerType*> type_of;
  for (const auto& t : config.pool->types) {
    for (std::size_t k = 0; k < t.count; ++k) type_of.push_back(&t);
  }
  const std::size_t n = type_of.size();
  const std::size_t sessions = config.pool->sessions;
  std::vector<SellerLedger> ledgers(n);
  auto work = [&](std::size_t first, std::size_t step) {
    for (std::size_t j = first; j < n; j += step) {
      const auto& type = *type_of[j];
      Scenario s;
      s.buyers = type.buyers;
      s.capacity = type.capacity;
      s.routing = arm.routing;
      s.boost = arm.boost;
      s.mechanism = MechanismSpec{arm.rule, arm.mu, type.reserve, arm.price};
      s.horizon = config.horizon;
      ledgers[j] = SellerLedger{static_cast<SellerId>(j), type.reserve, {}};
      for (std::size_t q = 0; q < sessions; ++q) {
        const auto session =
            run_session(s, derive_seed(seed, Stream::kSeller, (trial * n + j) * sessions + q));
        const auto part = ledger_of(session, ledgers[j].seller, type.reserve);
        ledgers[j].rows.insert(ledgers[j].rows.end(), part.rows.begin(), part.rows.end());
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (jobs == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(work, k, jobs);
  }
  return ledgers;
}

PoolReport run_pool(const ExperimentConfig& config, const RunOptions& options) {
  if (!config.pool) throw std::invalid_argument("config has no pool block");
  const auto seed = options.seed.value_or(config.seed);
  const auto& arm = config.arm(config.pool->mechanism);
  std::vector<std::string> type_name;
  std::vector<std::size_t> type_index;
  for (std::size_t t = 0; t < config.pool->types.size(); ++t) {
    for (std::size_t k = 0; k < config.pool->types[t].count; ++k) {
      type_name.push_back(config.pool->types[t].name);
      type_index.push_back(t);
    }
  }

  PoolReport out;
  const std::size_t ntypes = config.pool->types.size();
  std::vector<RunningStats> unpooled(ntypes), pooled(ntypes);
  RunningStats all_unpooled, all_pooled;
  std::array<RunningStats, 2> taxes;
  RunningStats residual;
  for (std::size_t trial = 0; trial < config.pool->trials; ++trial) {
    const auto ledgers = simulate_pool_ledgers(config, arm, seed, trial, options.jobs);
    auto rng = make_rng(seed, Stream::kPoolSplit, trial);
    const auto s = settle_pool(ledgers, rng);
    PoolTrialSummary ts;
    ts.trial = trial;
    for (int h = 0; h < 2; ++h) {
      ts.raw_tax[h] = s.halves[h].raw_tax;
      ts.tax[h] = s.halves[h].tax;
      taxes[h].add(s.halves[h].tax);
      out.max_raw_tax = std::max(out.max_raw_tax, s.halves[h].raw_tax);
    }
    ts.center_residual = s.center_residual;
    ts.relative_imbalance = relative_imbalance(s);
    out.max_relative_imbalance = std::max(out.max_relative_imbalance, ts.relative_imbalance);
    residual.add(s.center_residual);
    out.trials.push_back(ts);
    for (std::size_t j = 0; j < ledgers.size(); ++j) {
      const auto& t = s.transfers[j];
      const double before = buyer_payments(ledgers[j]);
      out.sellers.push_back({trial, t.seller, type_name[j], t.half, before, t.transfer,
                             s.halves[t.half].tax});
      unpooled[type_index[j]].add(before);
      pooled[type_index[j]].add(t.transfer);
      all_unpooled.add(before);
      all_pooled.add(t.transfer);
    }
  }

  auto& rows = out.table.rows;
  for (std::size_t t = 0; t < ntypes; ++t) {
    const double idx = static_cast<double>(t + 1);
    rows.push_back(row_of(config, seed, "seller_type", idx, arm.name, "unpooled_revenue",
                          unpooled[t].estimate()));
    rows.push_back(row_of(config, seed, "seller_type", idx, arm.name, "pooled_revenue",
                          pooled[t].estimate()));
    rows.push_back(exact_row(config, seed, "seller_type", idx, arm.name, "unpooled_revenue_var",
                             unpooled[t].variance()));
    rows.push_back(exact_row(config, seed, "seller_type", idx, arm.name, "pooled_revenue_var",
                             pooled[t].variance()));
  }
  rows.push_back(row_of(config, seed, "none", std::nullopt, arm.name, "tax_half0", taxes[0].estimate()));
  rows.push_back(row_of(config, seed, "none", std::nullopt, arm.name, "tax_half1", taxes[1].estimate()));
  rows.push_back(exact_row(config, seed, "none", std::nullopt, arm.name, "max_raw_tax", out.max_raw_tax));
  rows.push_back(row_of(config, seed, "none", std::nullopt, arm.name, "center_residual", residual.estimate()));
  rows.push_back(exact_row(config, seed, "none", std::nullopt, arm.name, "max_relative_imbalance",
                           out.max_relative_imbalance));
  const double ratio =
      all_unpooled.variance() > 0 ? all_pooled.variance() / all_unpooled.variance() : 0.0;
  rows.push_back(exact_row(config, seed, "none", std::nullopt, arm.name, "variance_ratio", ratio));
  return out;
}

}  // namespace bwprio

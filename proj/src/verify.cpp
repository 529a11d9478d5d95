#include "bwprio/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "bwprio/experiments.hpp"
#include "bwprio/scenarios.hpp"

namespace bwprio {

namespace {

constexpr std::array<std::string_view, 5> kSuites = {"monotonicity", "truthfulness", "natural",
                                                     "balance", "admissibility"};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned j = 0; j < jobs; ++j) {
    pool.emplace_back([&, j] {
      for (std::size_t k = j; k < n; k += jobs) fn(k);
    });
  }
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

struct NamedModel {
  std::string name;
  DemandRealization demand;
};

// One random instance of each of the six natural model families.
std::vector<NamedModel> random_natural_models(Rng& rng, Epoch horizon) {
  std::vector<NamedModel> out;
  out.push_back({"constant", constant_demand(uniform(rng, 1, 30))});

  FlowTraceParams p;
  p.mean_rate = uniform(rng, 5, 30);
  p.horizon = horizon;
  p.seed = rng();
  out.push_back({"buffered", buffered_demand(flow_trace_values(p))});

  const double rate = uniform(rng, 5, 30);
  const auto patience = static_cast<Epoch>(10 + rng() % 110);
  out.push_back({"impatient", impatient_demand(rate, patience, uniform(rng, 0, rate * patience))});

  std::vector<double> values(static_cast<std::size_t>(horizon));
  for (auto& v : values) v = uniform(rng, 0, 30);
  out.push_back({"time_varying", time_varying_demand([values](Epoch t) {
                   const auto k = static_cast<std::size_t>(t - 1);
                   return k < values.size() ? values[k] : 0.0;
                 })});

  const double a = uniform(rng, 0, 10), s = uniform(rng, 0, 20), cap = uniform(rng, 10, 40);
  out.push_back({"increasing_rate", increasing_rate_demand([a, s, cap](double z) {
                   return std::min(cap, a + s * z);
                 })});
  const double a2 = uniform(rng, 0, 10), s2 = uniform(rng, 0, 0.05), cap2 = uniform(rng, 10, 40);
  out.push_back({"increasing_total", increasing_total_demand([a2, s2, cap2](double x) {
                   return std::min(cap2, a2 + s2 * x);
                 })});
  return out;
}

BuyerSpec bursty(int id, double value, double rate) {
  BuyerSpec b;
  b.id = static_cast<BuyerId>(id);
  b.value = value;
  FlowTraceParams p;
  p.mean_rate = rate;
  b.demand = DemandSpec::flow_trace(p);
  return b;
}

SellerLedger random_ledger(int seller, double reserve, Rng& rng) {
  SellerLedger l{static_cast<SellerId>(seller), reserve, {}};
  const int n = 1 + static_cast<int>(rng() % 4);
  for (int k = 0; k < n; ++k) {
    const double bid = reserve + uniform(rng, 0, 10);
    const auto rec = resample_bid(static_cast<BuyerId>(k), bid, reserve, 0.2, rng);
    const double bytes = 1 + std::floor(uniform(rng, 0, 1000));
    l.rows.push_back({rec.buyer, bytes, bid, rec.perturbed, bks_settle(rec, bytes).rebate});
  }
  return l;
}

void finish(SuiteReport& r) { r.passed = r.failures == 0; }

}  // namespace

std::span<const std::string_view> suite_names() { return kSuites; }

SuiteReport verify_monotonicity(const SuiteOptions& options) {
  constexpr Epoch kHorizon = 600;
  constexpr std::size_t kPairs = 50;
  const std::size_t scenarios = options.runs.value_or(20);
  SuiteReport r;
  r.suite = "monotonicity";
  const std::size_t n_models = 6;
  // Each job owns one (model, scenario) cell; results fold in order.
  std::vector<std::size_t> fails(n_models * scenarios, 0);
  std::vector<std::string> witness(n_models * scenarios);
  std::vector<std::string> names(n_models);
  parallel_for(scenarios, options.jobs, [&](std::size_t sc) {
    auto rng = make_rng(options.seed, Stream::kRun, sc);
    auto models = random_natural_models(rng, kHorizon);
    for (std::size_t m = 0; m < n_models; ++m) {
      if (sc == 0) names[m] = models[m].name;
      Scenario s;
      BuyerSpec tested;
      tested.id = BuyerId{1};
      tested.value = 1;
      tested.demand = DemandSpec::fixed(models[m].demand);
      s.buyers = {tested, bursty(2, uniform(rng, 0.5, 8), uniform(rng, 5, 30)),
                  bursty(3, uniform(rng, 0.5, 8), uniform(rng, 5, 30))};
      s.capacity = uniform(rng, 10, 60);
      s.mechanism.rule = PaymentRule::kBks;
      s.horizon = kHorizon;
      const auto world = make_world(s, rng());
      for (std::size_t pair = 0; pair < kPairs; ++pair) {
        double lo = uniform(rng, 0, 10), hi = uniform(rng, 0, 10);
        if (lo > hi) std::swap(lo, hi);
        if (!(hi > lo)) continue;
        s.buyers[0].bid_override = lo;
        const double x_lo = run_session(s, world).buyers[0].real_bytes;
        s.buyers[0].bid_override = hi;
        const double x_hi = run_session(s, world).buyers[0].real_bytes;
        if (x_hi < x_lo - 1e-9 * (1 + x_lo)) {
          if (fails[m * scenarios + sc]++ == 0) {
            witness[m * scenarios + sc] =
                fmt("%s scenario %zu: x(%.6g)=%.10g < x(%.6g)=%.10g", models[m].name.c_str(), sc,
                    hi, x_hi, lo, x_lo);
          }
        }
      }
    }
  });
  for (std::size_t m = 0; m < n_models; ++m) {
    std::size_t model_fails = 0;
    for (std::size_t sc = 0; sc < scenarios; ++sc) {
      model_fails += fails[m * scenarios + sc];
      if (!witness[m * scenarios + sc].empty()) r.lines.push_back(witness[m * scenarios + sc]);
    }
    r.lines.push_back(fmt("%s: %zu scenarios x %zu pairs, %zu violations", names[m].c_str(),
                          scenarios, kPairs, model_fails));
    r.failures += model_fails;
  }
  r.checks = n_models * scenarios * kPairs;
  finish(r);
  r.summary = fmt("%zu bid pairs, %zu violations", r.checks, r.failures);
  return r;
}

SuiteReport verify_truthfulness(const SuiteOptions& options) {
  const std::size_t runs = options.runs.value_or(10000);
  constexpr std::array<double, 4> kFactors = {0.5, 0.8, 1.2, 2.0};
  auto config = scenarios::fig3();
  config.capacity = 25;
  const auto scenario = config.scenario(config.arm("bks"));
  const std::size_t n = scenario.buyers.size();
  const std::size_t width = n * (1 + kFactors.size());
  std::vector<double> u(runs * width);
  parallel_for(runs, options.jobs, [&](std::size_t k) {
    const auto world = make_world(scenario, run_seed(options.seed, k));
    const auto truthful = run_session(scenario, world);
    double* row = &u[k * width];
    for (std::size_t i = 0; i < n; ++i) {
      row[i * 5] = truthful.buyers[i].utility;
      for (std::size_t f = 0; f < kFactors.size(); ++f) {
        auto dev = scenario;
        dev.buyers[i].strategy = StrategySpec::misreport(kFactors[f]);
        row[i * 5 + 1 + f] = run_session(dev, world).buyers[i].utility;
      }
    }
  });
  SuiteReport r;
  r.suite = "truthfulness";
  for (std::size_t i = 0; i < n; ++i) {
    RunningStats truth;
    for (std::size_t k = 0; k < runs; ++k) truth.add(u[k * width + i * 5]);
    for (std::size_t f = 0; f < kFactors.size(); ++f) {
      RunningStats dev, diff;
      for (std::size_t k = 0; k < runs; ++k) {
        const double t = u[k * width + i * 5];
        const double d = u[k * width + i * 5 + 1 + f];
        dev.add(d);
        diff.add(t - d);
      }
      const auto e = diff.estimate();
      const double margin = e.half_width(kZ95OneSided);
      const bool ok = e.mean >= -margin;
      ++r.checks;
      if (!ok) ++r.failures;
      r.lines.push_back(fmt("buyer %d bid %.1fv: truthful %.6g vs %.6g, diff %.6g (margin %.6g) %s",
                            to_int(scenario.buyers[i].id), kFactors[f], truth.mean(), dev.mean(),
                            e.mean, margin, ok ? "ok" : "VIOLATION"));
    }
  }
  finish(r);
  r.summary = fmt("%zu runs, %zu buyer/deviation pairs, %zu violations", runs, r.checks, r.failures);
  return r;
}

SuiteReport verify_natural(const SuiteOptions& options) {
  SuiteReport r;
  r.suite = "natural";
  auto rng = make_rng(options.seed, Stream::kRun, 0);
  auto models = random_natural_models(rng, 600);
  FlowTraceParams p;
  p.seed = rng();
  models.push_back({"flow_trace", flow_trace_demand(p)});
  models.push_back({"impatient_paper", impatient_demand(10, 60, 500)});
  models.push_back({"quota_fixture", quota_giveup_fixture(10, 50)});
  const std::size_t triples = options.runs.value_or(1000);
  std::size_t unnatural = 0;
  bool fixture_failed = false;
  std::vector<double> x_grid;
  for (double x = 0; x <= 1000; x += 5) x_grid.push_back(x);
  const std::vector<double> c_grid = {0.5, 1, 5, 10, 25, 60};
  for (const auto& m : models) {
    auto report = check_natural_random(m.demand, 600, 2000, 60, triples, rng);
    if (report.natural) report = check_natural(m.demand, 1, 120, x_grid, c_grid);
    ++r.checks;
    if (report.natural) {
      r.lines.push_back(fmt("%s: natural", m.name.c_str()));
      continue;
    }
    ++unnatural;
    const auto& w = *report.witness;
    r.lines.push_back(fmt("%s: NOT natural at t=%lld x=%.6g x'=%.6g c=%.6g (%.6g < %.6g)",
                          m.name.c_str(), static_cast<long long>(w.t), w.x, w.x_prime, w.capacity,
                          w.lhs, w.rhs));
    if (m.name == "quota_fixture") fixture_failed = true;
  }
  r.failures = (unnatural == 1 && fixture_failed) ? 0 : 1;
  finish(r);
  r.summary = fmt("%zu models, %zu unnatural (expected exactly the fixture)", models.size(), unnatural);
  return r;
}

SuiteReport verify_balance(const SuiteOptions& options) {
  SuiteReport r;
  r.suite = "balance";
  const std::size_t pools = options.runs.value_or(500);
  auto rng = make_rng(options.seed, Stream::kPoolSplit, 0);
  double worst = 0.0;
  std::size_t binding = 0, nonzero_uncapped = 0;
  for (std::size_t k = 0; k < pools; ++k) {
    const int n = 2 + static_cast<int>(rng() % 30);
    const double reserve = k % 3 == 0 ? 0.0 : uniform(rng, 0, 3);
    std::vector<SellerLedger> ledgers;
    for (int j = 0; j < n; ++j) ledgers.push_back(random_ledger(j, reserve, rng));
    const std::uint64_t split = rng();
    Rng a(split), b(split);
    const auto capped = settle_pool(ledgers, a);
    const auto uncapped = settle_pool(ledgers, b, TaxCap::kUncapped);
    worst = std::max({worst, relative_imbalance(capped), relative_imbalance(uncapped)});
    if (capped.cap_binding()) ++binding;
    // Every ledger has positive credit, so without the cap nothing is absorbed.
    if (uncapped.center_residual != 0.0) ++nonzero_uncapped;
    if (!capped.cap_binding() && capped.center_residual != 0.0) ++nonzero_uncapped;
    r.checks += 2;
  }
  const bool ok = worst < 1e-9 && nonzero_uncapped == 0;
  r.failures = ok ? 0 : 1;
  finish(r);
  r.lines.push_back(fmt("%zu pools, %zu with a binding cap", pools, binding));
  r.lines.push_back(fmt("max relative imbalance %.3g, uncapped residuals not exactly 0: %zu", worst,
                        nonzero_uncapped));
  r.summary = fmt("max relative imbalance %.3g over %zu pools; uncapped residual exactly 0 in all",
                  worst, pools);
  if (nonzero_uncapped) r.summary = fmt("%zu uncapped settlements left a residual", nonzero_uncapped);
  return r;
}

SuiteReport verify_admissibility(const SuiteOptions& options) {
  SuiteReport r;
  r.suite = "admissibility";
  const std::size_t trials = options.runs.value_or(100);
  const auto config = scenarios::fig6();
  const auto& arm = config.arm("bks");
  std::vector<SellerLedger> bank;
  double max_tax = 0.0;
  std::size_t over = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto ledgers = simulate_pool_ledgers(config, arm, options.seed, t, options.jobs);
    auto rng = make_rng(options.seed, Stream::kPoolSplit, t);
    const auto s = settle_pool(ledgers, rng);
    for (const auto& h : s.halves) {
      max_tax = std::max(max_tax, h.raw_tax);
      if (!(h.raw_tax < 1.0)) ++over;
    }
    bank.insert(bank.end(), ledgers.begin(), ledgers.end());
  }
  r.checks += trials;
  if (over) ++r.failures;
  r.lines.push_back(fmt("200 sellers, %zu trials: max tax rate %.4f, halves with tax >= 1: %zu",
                        trials, max_tax, over));

  const std::vector<LedgerSampler> samplers = {[&bank](Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, bank.size() - 1);
    return bank[pick(rng)];
  }};
  auto rng = make_rng(options.seed, Stream::kPoolSplit, trials + 1);
  double last = 1.0;
  std::string trend;
  for (std::size_t m : {5, 20, 80}) {
    const auto est = tax_admissibility_estimate(samplers, m, 2000, rng);
    ++r.checks;
    if (est.probability() > last) ++r.failures;
    last = est.probability();
    trend += fmt("%sm=%zu: %.4f", trend.empty() ? "" : ", ", m, est.probability());
  }
  r.lines.push_back("Pr(tax > 1): " + trend);
  finish(r);
  r.summary = fmt("max tax %.4f over %zu trials; Pr(tax>1) %s", max_tax, trials, trend.c_str());
  return r;
}

SuiteReport run_suite(std::string_view name, const SuiteOptions& options) {
  if (name == "monotonicity") return verify_monotonicity(options);
  if (name == "truthfulness") return verify_truthfulness(options);
  if (name == "natural") return verify_natural(options);
  if (name == "balance") return verify_balance(options);
  if (name == "admissibility") return verify_admissibility(options);
  throw std::invalid_argument("unknown suite '" + std::string(name) +
                              "' (expected monotonicity, truthfulness, natural, balance or "
                              "admissibility)");
}

}  // namespace bwprio

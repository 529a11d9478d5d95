#include "doctest.h"

#include <cmath>
#include <numeric>

#include "bwprio/demand.hpp"
#include "bwprio/stats.hpp"

using namespace bwprio;

TEST_CASE("constant demand ignores epoch and history") {
  const auto d = constant_demand(10);
  CHECK(d.query(1, 0) == 10);
  CHECK(d.query(500, 4000) == 10);
  CHECK(constant_demand(0).query(77, 3) == 0);
  CHECK(d.memoryless());
  CHECK_THROWS_AS(constant_demand(-1), std::invalid_argument);
}

TEST_CASE("queries outside the valid domain fail") {
  const auto d = constant_demand(1);
  CHECK_THROWS_AS(d.query(0, 0), std::domain_error);
  CHECK_THROWS_AS(d.query(1, -1), std::domain_error);
  const auto bad = time_varying_demand([](Epoch) { return -2.0; });
  CHECK_THROWS_AS(bad.query(3, 0), std::domain_error);
}

TEST_CASE("buffered demand is the unsent backlog") {
  const auto d = buffered_demand(std::vector<double>(10, 5.0));
  CHECK(d.query(3, 0) == 15);
  CHECK(d.query(3, 15) == 0);
  CHECK(d.query(3, 20) == 0);  // padding can push x past the generated total
  CHECK(d.query(50, 10) == 40);  // generation stops after the sequence
  CHECK_FALSE(d.memoryless());
  CHECK_THROWS_AS(buffered_demand({1.0, -1.0}), std::invalid_argument);
}

TEST_CASE("impatient demand follows the three branches") {
  const auto d = impatient_demand(10, 60, 500);
  CHECK(d.query(30, 0) == 10);
  CHECK(d.query(61, 501) == 10);
  CHECK(d.query(61, 400) == 0);
  CHECK(d.query(61, 500) == 0);  // threshold is strict
  CHECK(d.query(60, 0) == 10);
  CHECK_FALSE(d.memoryless());
  CHECK_THROWS_AS(impatient_demand(10, 0, 5), std::invalid_argument);
}

TEST_CASE("pass-through generation models") {
  CHECK(time_varying_demand([](Epoch t) { return static_cast<double>(t); }).query(7, 123) == 7);
  CHECK(increasing_total_demand([](double x) { return x / 100; }).query(9, 200) == 2);
  CHECK(increasing_rate_demand([](double z) { return 2 * z; }).query(4, 8) == 4);
  CHECK_THROWS_AS(increasing_total_demand([](double x) { return x < 10 ? 5.0 : 1.0; }),
                  std::invalid_argument);
  CHECK_THROWS_AS(increasing_rate_demand([](double z) { return -z; }), std::invalid_argument);
}

TEST_CASE("lognormal parameters reproduce the requested moments") {
  const auto p = lognormal_from_moments(30, 30);
  const double mean = std::exp(p.mu + p.sigma * p.sigma / 2);
  const double var = (std::exp(p.sigma * p.sigma) - 1) * std::exp(2 * p.mu + p.sigma * p.sigma);
  CHECK(mean == doctest::Approx(30).epsilon(1e-12));
  CHECK(std::sqrt(var) == doctest::Approx(30).epsilon(1e-12));
  CHECK_THROWS_AS(lognormal_from_moments(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(lognormal_from_moments(1, -1), std::invalid_argument);
}

TEST_CASE("flow trace is deterministic, memoryless and zero past the horizon") {
  FlowTraceParams p;
  p.seed = 99;
  const auto a = flow_trace_values(p);
  const auto b = flow_trace_values(p);
  CHECK(a == b);
  REQUIRE(a.size() == 600);
  const auto d = flow_trace_demand(p);
  CHECK(d.memoryless());
  CHECK(d.query(25, 0) == a[24]);
  CHECK(d.query(25, 1e6) == a[24]);
  CHECK(d.query(601, 0) == 0);
  p.seed = 100;
  CHECK(flow_trace_values(p) != a);

  p.mean_rate = 0;
  const auto zero = flow_trace_values(p);
  CHECK(std::all_of(zero.begin(), zero.end(), [](double v) { return v == 0; }));

  FlowTraceParams bad;
  bad.stddev_duration = 0;
  CHECK_THROWS_AS(flow_trace_values(bad), std::invalid_argument);
  bad = {};
  bad.horizon = 0;
  CHECK_THROWS_AS(flow_trace_values(bad), std::invalid_argument);
}

TEST_CASE("flow trace average demand matches the flow rate") {
  for (double rate : {10.0, 30.0}) {
    RunningStats per_trace;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      FlowTraceParams p;
      p.mean_rate = rate;
      p.seed = seed;
      const auto v = flow_trace_values(p);
      per_trace.add(std::accumulate(v.begin(), v.end(), 0.0) / v.size());
    }
    CAPTURE(rate);
    CHECK(std::abs(per_trace.mean() - rate) < 0.05 * rate);
  }
}

TEST_CASE("naturalness holds for the built-in models") {
  Rng rng(7);
  const std::vector<DemandRealization> models = {
      constant_demand(10),
      time_varying_demand([](Epoch t) { return 5.0 + 3.0 * std::sin(0.1 * t); }),
      buffered_demand(std::vector<double>(600, 7.0)),
      impatient_demand(10, 60, 500),
      increasing_rate_demand([](double z) { return std::min(40.0, 2.0 + 0.5 * z); }),
      increasing_total_demand([](double x) { return std::min(30.0, 1.0 + x / 50.0); }),
      flow_trace_demand(FlowTraceParams{}),
  };
  for (const auto& d : models) {
    CAPTURE(to_string(d.kind()));
    const auto r = check_natural_random(d, 600, 4000, 60, 1000, rng);
    CHECK(r.natural);
    CHECK(r.checked == 1000);
  }
  const std::vector<double> xs = {0, 100, 400, 499, 500, 500.5, 501, 700};
  const std::vector<double> cs = {0, 1, 5, 10, 50};
  CHECK(check_natural(impatient_demand(10, 60, 500), 55, 65, xs, cs).natural);
  CHECK(check_natural(constant_demand(10), 1, 5, xs, cs).natural);
}

TEST_CASE("the give-up fixture is caught with a witness") {
  const auto d = quota_giveup_fixture(10, 300);
  const std::vector<double> xs = {0, 295, 300, 310};
  const std::vector<double> cs = {0, 10};
  const auto r = check_natural(d, 1, 3, xs, cs);
  REQUIRE_FALSE(r.natural);
  REQUIRE(r.witness);
  CHECK(r.witness->x >= r.witness->x_prime);
  CHECK(r.witness->lhs < r.witness->rhs);
  // The reported tuple really violates the inequality.
  const auto& w = *r.witness;
  CHECK(w.x + std::min(w.capacity, d.query(w.t, w.x)) <
        w.x_prime + std::min(w.capacity, d.query(w.t, w.x_prime)));
}

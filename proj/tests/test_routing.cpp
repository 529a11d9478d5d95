#include "doctest.h"

#include <map>
#include <numeric>

#include "bwprio/routing.hpp"
#include "oracles.hpp"

using namespace bwprio;

namespace {

std::vector<EpochRequest> reqs(std::vector<double> demand, std::vector<double> priority = {}) {
  std::vector<EpochRequest> out;
  for (std::size_t k = 0; k < demand.size(); ++k) {
    out.push_back({static_cast<BuyerId>(k + 1), demand[k], priority.empty() ? 0.0 : priority[k]});
  }
  return out;
}

void check_feasible(const std::vector<EpochRequest>& r, const EpochAllocation& a, double c) {
  double sum_d = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    CHECK(a.grants[k] >= 0.0);
    CHECK(a.grants[k] <= r[k].demand + 1e-12);
    sum_d += r[k].demand;
  }
  CHECK(a.total() <= c + 1e-9);
  if (sum_d <= c) {
    for (std::size_t k = 0; k < r.size(); ++k) CHECK(a.grants[k] == doctest::Approx(r[k].demand));
  } else {
    CHECK(a.total() == doctest::Approx(c));  // oversubscribed: nothing left idle
  }
}

}  // namespace

TEST_CASE("fifo splits in proportion to demand") {
  const auto r = reqs({10, 30});
  const auto a = allocate_fifo(r, 20);
  CHECK(a.grants[0] == doctest::Approx(5));
  CHECK(a.grants[1] == doctest::Approx(15));
  CHECK(allocate_fifo(reqs({10, 5}), 100).grants == std::vector<double>{10, 5});
  CHECK(allocate_fifo(reqs({0, 0}), 20).grants == std::vector<double>{0, 0});
  CHECK(a.grant(static_cast<BuyerId>(2)) == doctest::Approx(15));
  CHECK(a.grant(static_cast<BuyerId>(9)) == 0);
}

TEST_CASE("fq water-fills unused shares") {
  const auto a = allocate_fq(reqs({5, 20, 20}), 30);
  CHECK(a.grants[0] == doctest::Approx(5));
  CHECK(a.grants[1] == doctest::Approx(12.5));
  CHECK(a.grants[2] == doctest::Approx(12.5));
  const auto b = allocate_fq(reqs({40, 40, 40}), 30);
  for (double g : b.grants) CHECK(g == doctest::Approx(10));
  CHECK(allocate_fq(reqs({1, 2, 3}), 30).grants == std::vector<double>{1, 2, 3});
}

TEST_CASE("spq fills in bid order") {
  auto a = allocate_spq_seeded(reqs({1, 1}, {3, 2}), 1, 0);
  CHECK(a.grants == std::vector<double>{1, 0});
  a = allocate_spq_seeded(reqs({10, 10, 30}, {3, 2, 1}), 25, 0);
  CHECK(a.grants == std::vector<double>{10, 10, 5});
}

TEST_CASE("spq breaks exact ties at random") {
  Rng rng(2024);
  std::map<std::vector<double>, int> seen;
  constexpr int kDraws = 20000;
  for (int k = 0; k < kDraws; ++k) seen[allocate_spq(reqs({10, 10}, {2, 2}), 10, rng).grants]++;
  REQUIRE(seen.size() == 2);
  const double first = static_cast<double>(seen[{10, 0}]) / kDraws;
  // Binomial(20000, 1/2): 4 standard errors is about 0.014.
  CHECK(std::abs(first - 0.5) < 0.015);
}

TEST_CASE("spq consumes one draw per epoch") {
  Rng a(5), b(5);
  allocate_spq(reqs({1, 2, 3, 4}, {1, 1, 1, 1}), 3, a);
  b();
  CHECK(a() == b());
}

TEST_CASE("rejects negative inputs") {
  CHECK_THROWS_AS(allocate_fifo(reqs({1}), -1), std::invalid_argument);
  CHECK_THROWS_AS(allocate_fq(reqs({-1}), 1), std::invalid_argument);
}

TEST_CASE("random instances: feasibility, fq matches max-min oracle, spq monotone in key") {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    std::vector<double> demand, prio;
    for (int k = 0; k < n; ++k) {
      demand.push_back(rng() % 4 == 0 ? 0.0 : uniform01(rng) * 40);
      prio.push_back(std::floor(uniform01(rng) * 5));  // frequent ties
    }
    const double c = uniform01(rng) * 80;
    const auto r = reqs(demand, prio);
    const std::uint64_t tie = rng();

    const auto fifo = allocate_fifo(r, c);
    const auto fq = allocate_fq(r, c);
    const auto spq = allocate_spq_seeded(r, c, tie);
    check_feasible(r, fifo, c);
    check_feasible(r, fq, c);
    check_feasible(r, spq, c);

    const auto expect = oracle::fq_water_level(demand, c);
    for (int k = 0; k < n; ++k) CHECK(fq.grants[k] == doctest::Approx(expect[k]).epsilon(1e-7));

    // Raising one key never lowers that buyer's grant.
    const int i = static_cast<int>(rng() % n);
    auto raised = r;
    raised[i].priority += 1 + std::floor(uniform01(rng) * 3);
    CHECK(allocate_spq_seeded(raised, c, tie).grants[i] >= spq.grants[i]);

    // Grants of strictly higher keys do not depend on buyer i's demand.
    auto changed = r;
    changed[i].demand = uniform01(rng) * 40;
    const auto other = allocate_spq_seeded(changed, c, tie);
    for (int k = 0; k < n; ++k) {
      if (r[k].priority > r[i].priority) CHECK(other.grants[k] == spq.grants[k]);
    }
  }
}

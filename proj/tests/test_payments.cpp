#include "doctest.h"

#include <cmath>

#include "bwprio/payments.hpp"
#include "oracles.hpp"

using namespace bwprio;

constexpr BuyerId kBuyer{1};

TEST_CASE("resampling branches") {
  auto rec = resample_bid(kBuyer, 10, 2, 0.2, ResampleDraw{0.5, 0.3});
  CHECK_FALSE(rec.resampled);
  CHECK(rec.perturbed == 10);

  rec = resample_bid(kBuyer, 10, 2, 0.2, ResampleDraw{0.1, 1.0});
  CHECK(rec.resampled);
  CHECK(rec.perturbed == doctest::Approx(10));

  rec = resample_bid(kBuyer, 10, 2, 0.2, ResampleDraw{0.1, 0.5});
  CHECK(rec.resampled);
  // 2 + 8 * 0.5^1.25 = 2 + 8 * 0.42044820762685725
  CHECK(rec.perturbed == doctest::Approx(5.363585661014858).epsilon(1e-12));

  // r = 0 degrades to b * gamma^(1/(1-mu)); bidding exactly r is allowed.
  CHECK(resample_bid(kBuyer, 4, 0, 0.5, ResampleDraw{0.0, 0.25}).perturbed ==
        doctest::Approx(0.25));
  CHECK(resample_bid(kBuyer, 2, 2, 0.2, ResampleDraw{0.0, 0.7}).perturbed == 2);

  CHECK_THROWS_AS(resample_bid(kBuyer, 1, 2, 0.2, ResampleDraw{}), std::invalid_argument);
  CHECK_THROWS_AS(resample_bid(kBuyer, 3, 2, 1.0, ResampleDraw{}), std::invalid_argument);
  CHECK_THROWS_AS(resample_bid(kBuyer, 3, 2, 0.0, ResampleDraw{}), std::invalid_argument);
}

TEST_CASE("resampled bids follow the h-canonical distribution") {
  Rng rng(31337);
  constexpr double b = 10, r = 2, mu = 0.2;
  std::vector<double> draws;
  std::size_t resampled = 0;
  constexpr std::size_t kTotal = 500000;
  for (std::size_t k = 0; k < kTotal; ++k) {
    const auto rec = resample_bid(kBuyer, b, r, mu, rng);
    CHECK_MESSAGE((rec.perturbed >= r && rec.perturbed <= b), "support violated");
    if (rec.resampled) {
      ++resampled;
      draws.push_back(rec.perturbed);
    } else {
      CHECK_MESSAGE(rec.perturbed == b, "unperturbed bid changed");
    }
  }
  // Binomial(500000, 0.2): 4 standard errors of the frequency is 0.0023.
  CHECK(std::abs(static_cast<double>(resampled) / kTotal - mu) < 0.0023);
  REQUIRE(draws.size() > 90000);
  const double ks = oracle::ks_distance(draws, [](double a) { return resampled_bid_cdf(a, b, r, mu); });
  // Kolmogorov 0.1% critical value 1.95 / sqrt(n).
  CHECK(ks < 1.95 / std::sqrt(static_cast<double>(draws.size())));
  // Footnote family: F(a) = ((a - r)/(b - r))^(1 - mu) at the midpoint.
  CHECK(resampled_bid_cdf(6, b, r, mu) == doctest::Approx(std::pow(0.5, 0.8)));
}

TEST_CASE("bks settlement") {
  BidRecord rec{kBuyer, 5, 2, 0.2, true, 3};
  auto p = bks_settle(rec, 100);
  CHECK(p.gross == doctest::Approx(500));
  CHECK(p.rebate == doctest::Approx(1500));
  CHECK(p.net == doctest::Approx(-1000));
  rec.resampled = false;
  rec.perturbed = 5;
  p = bks_settle(rec, 100);
  CHECK(p.rebate == 0);
  CHECK(p.net == doctest::Approx(500));
  CHECK(bks_settle({kBuyer, 7, 1, 0.3, true, 2}, 0).net == 0);
  CHECK_THROWS_AS(bks_settle(rec, -1), std::invalid_argument);
}

TEST_CASE("vmm charges for the one-packet example") {
  CHECK(vmm_epoch_charges(std::vector<double>{3, 2}, std::vector<double>{1, 1}, 1) ==
        std::vector<double>{2, 0});
  CHECK(vmm_epoch_charges(std::vector<double>{3}, std::vector<double>{7}, 1) ==
        std::vector<double>{0});
  CHECK(vmm_epoch_charges(std::vector<double>{3, 2}, std::vector<double>{1, 1}, 2) ==
        std::vector<double>{0, 0});
}

TEST_CASE("vmm charges match brute-force VCG on integer instances") {
  Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4);
    std::vector<double> bids;
    std::vector<int> dem;
    std::vector<double> demd;
    for (int k = 0; k < n; ++k) {
      bids.push_back(1 + static_cast<double>(rng() % 1000) / 100.0 + k * 1e-4);  // distinct
      dem.push_back(static_cast<int>(rng() % 6));
      demd.push_back(dem.back());
    }
    const int c = static_cast<int>(rng() % 10);
    const auto charges = vmm_epoch_charges(bids, demd, c);
    const auto alloc = value_max_allocation(bids, demd, c);
    CHECK(std::inner_product(bids.begin(), bids.end(), alloc.begin(), 0.0) ==
          doctest::Approx(oracle::brute_value_max(bids, dem, c)));
    for (int i = 0; i < n; ++i) {
      const double expect = oracle::brute_value_max(bids, dem, c, i) -
                            oracle::brute_others_value(bids, dem, c, static_cast<std::size_t>(i));
      CHECK(charges[i] == doctest::Approx(expect).epsilon(1e-9));
      CHECK(charges[i] >= 0);
      CHECK(charges[i] <= bids[i] * alloc[i] + 1e-9);
    }
  }
}

TEST_CASE("tied bids share the marginal capacity") {
  const auto a = value_max_allocation(std::vector<double>{2, 2, 5}, std::vector<double>{4, 4, 1}, 3);
  CHECK(a == std::vector<double>{1, 1, 1});
}

TEST_CASE("fixed price") {
  const std::vector<double> bids = {10, 4, 1};
  CHECK(fixed_price_eligibility(bids, 1) == std::vector<bool>{true, true, true});
  CHECK(fixed_price_eligibility(bids, 2) == std::vector<bool>{true, true, false});
  CHECK(fixed_price_settle(100, 1) == 100);
  CHECK_THROWS_AS(fixed_price_eligibility(bids, -1), std::invalid_argument);
}

TEST_CASE("expected bks payment equals the Myerson payment of the smoothed rule") {
  // Buyer with bid 3 facing a competitor at 2 who would otherwise send every
  // epoch: the buyer gets 600 KB above 2 and nothing below.
  constexpr double bid = 3, r = 0, mu = 0.2;
  auto alloc = [](double w) { return w > 2 ? 600.0 : 0.0; };
  const double myerson = oracle::myerson_bks_payment(alloc, bid, r, mu);
  const auto est = expected_bks_payment(
      [&](std::uint64_t seed) {
        Rng rng(seed);
        const auto rec = resample_bid(kBuyer, bid, r, mu, rng);
        return bks_settle(rec, alloc(rec.perturbed)).net;
      },
      200000, 8);
  CAPTURE(myerson);
  CAPTURE(est.mean);
  CHECK(std::abs(est.mean - myerson) < 4 * est.std_error());

  // Same with a reserve: payment is r*x at the bottom plus the integral part.
  auto alloc2 = [](double w) { return w > 4 ? 100.0 : (w > 2.5 ? 40.0 : 0.0); };
  const double myerson2 = oracle::myerson_bks_payment(alloc2, 6, 1, 0.3);
  const auto est2 = expected_bks_payment(
      [&](std::uint64_t seed) {
        Rng rng(seed);
        const auto rec = resample_bid(kBuyer, 6, 1, 0.3, rng);
        return bks_settle(rec, alloc2(rec.perturbed)).net;
      },
      200000, 9);
  CHECK(std::abs(est2.mean - myerson2) < 4 * est2.std_error());
}

TEST_CASE("single uncontested buyer pays nothing in expectation") {
  const auto est = expected_bks_payment(
      [](std::uint64_t seed) {
        Rng rng(seed);
        return bks_settle(resample_bid(kBuyer, 5, 0, 0.05, rng), 100).net;
      },
      20000, 3);
  CHECK(est.ci_low() <= 0.0);
  CHECK(est.ci_high() >= 0.0);
  // Never resampled: the charge is exactly b * x.
  const auto fixed = expected_bks_payment(
      [](std::uint64_t) { return bks_settle(resample_bid(kBuyer, 5, 0, 0.05, ResampleDraw{1, 0}), 100).net; },
      10, 3);
  CHECK(fixed.mean == 500);
  CHECK(fixed.stddev == 0);
  CHECK_THROWS_AS(expected_bks_payment([](std::uint64_t) { return 0.0; }, 0, 1),
                  std::invalid_argument);
}

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "rankverify/families.hpp"
#include "rankverify/logspace.hpp"
#include "rankverify/rng.hpp"

using namespace rankverify;

TEST_SUITE("families") {
  TEST_CASE("spec validation rejects malformed shapes") {
    CHECK_NOTHROW(validate_spec(multinomial_spec(2, 1)));
    CHECK_THROWS_AS(validate_spec(multinomial_spec(1, 10)), std::invalid_argument);
    CHECK_THROWS_AS(validate_spec(multinomial_spec(3, 0)), std::invalid_argument);
    CHECK_THROWS_AS(validate_spec(multinomial_spec(3, -4)), std::invalid_argument);
    CHECK_THROWS_AS(validate_spec(independent_binomial_spec(2, 0)), std::invalid_argument);
    // the variance family needs at least two observations per group
    CHECK_THROWS_AS(validate_spec(normal_variance_spec(3, 1)), std::invalid_argument);
    CHECK_NOTHROW(validate_spec(normal_variance_spec(3, 2)));
    // round-robin totals grow as C(n,2); n is capped where enumeration stays sane
    CHECK_NOTHROW(validate_spec(bradley_terry_spec(6)));
    CHECK_THROWS_AS(validate_spec(bradley_terry_spec(7)), std::invalid_argument);
  }

  TEST_CASE("observation validation") {
    auto mn = multinomial_spec(3, 10);
    CHECK_NOTHROW(validate(mn, {7, 2, 1}));
    CHECK_THROWS_AS(validate(mn, {7, 2, 2}), std::invalid_argument);   // wrong total
    CHECK_THROWS_AS(validate(mn, {7.5, 1.5, 1}), std::invalid_argument);  // not integers
    CHECK_THROWS_AS(validate(mn, {11, -1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(validate(mn, {7, 2}), std::invalid_argument);  // wrong length

    auto ib = independent_binomial_spec(2, 5);
    CHECK_NOTHROW(validate(ib, {5, 0}));
    CHECK_THROWS_AS(validate(ib, {6, 0}), std::invalid_argument);  // exceeds trials per arm

    auto nv = normal_variance_spec(2, 4);
    CHECK_NOTHROW(validate(nv, {0.5, 3.25}));
    CHECK_THROWS_AS(validate(nv, {0.0, 1.0}), std::invalid_argument);  // nonpositive

    auto bt = bradley_terry_spec(4);
    CHECK_NOTHROW(validate(bt, {3, 2, 1, 0}));
    CHECK_THROWS_AS(validate(bt, {3, 2, 1, 1}), std::invalid_argument);  // total != C(4,2)
    CHECK_THROWS_AS(validate(bt, {4, 1, 1, 0}), std::invalid_argument);  // beats more than n-1
  }

  TEST_CASE("carrier values, hand-computed") {
    // 1/∏ x_j!: (2,1,0) -> 1/2
    CHECK(carrier_log(multinomial_spec(3, 3), {2, 1, 0}) == doctest::Approx(std::log(0.5)).epsilon(1e-14));
    // ∏ C(m, x_j): C(4,2)*C(4,1) = 24
    CHECK(carrier_log(independent_binomial_spec(2, 4), {2, 1}) ==
          doctest::Approx(std::log(24.0)).epsilon(1e-14));
    // ∏ r^{(m-3)/2} with m=5: r1*r2 = 6
    CHECK(carrier_log(normal_variance_spec(2, 5), {2.0, 3.0}) ==
          doctest::Approx(std::log(6.0)).epsilon(1e-14));
    // tournament counts: the 3-cycle score (1,1,1) has two orientations,
    // (2,1,0) exactly one
    CHECK(carrier_log(bradley_terry_spec(3), {1, 1, 1}) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(carrier_log(bradley_terry_spec(3), {2, 1, 0}) == doctest::Approx(0.0).epsilon(1e-14));
    // (3,3,0,0) sums to C(4,2) but two players cannot both beat everyone
    CHECK(carrier_log(bradley_terry_spec(4), {3, 3, 0, 0}) == neg_inf);
  }

  TEST_CASE("tournament counts sum to 2^games") {
    // every orientation of the complete graph lands on exactly one score vector
    for (int n = 3; n <= 5; ++n) {
      auto bt = bradley_terry_spec(n);
      long games = n * (n - 1) / 2;
      double total = 0.0;
      // odometer over [0, n-1]^n, keeping rows with the right sum
      std::vector<long> x(n, 0);
      for (;;) {
        long s = 0;
        for (long v : x) s += v;
        if (s == games) {
          std::vector<double> xd(x.begin(), x.end());
          double lg = carrier_log(bt, xd);
          if (lg > neg_inf) total += std::exp(lg);
        }
        int i = 0;
        while (i < n && x[i] == n - 1) x[i++] = 0;
        if (i == n) break;
        ++x[i];
      }
      CHECK(total == doctest::Approx(std::pow(2.0, double(games))).epsilon(1e-12));
    }
  }

  TEST_CASE("make_observation labels") {
    auto obs = make_observation({3, 2, 1});
    REQUIRE(obs.labels.size() == 3);
    CHECK(obs.labels[0] == "pop1");
    CHECK(obs.labels[2] == "pop3");
    CHECK_THROWS_AS(make_observation({1, 2}, {"a"}), std::invalid_argument);
    CHECK_THROWS_AS(make_observation({1, 2}, {"a", "a"}), std::invalid_argument);
  }

  TEST_CASE("ordering with lowest-index ties") {
    auto spec = multinomial_spec(4, 9);
    auto v = order_observation(spec, {3, 1, 3, 2}, TieMode::lowest_index);
    CHECK(v.order == std::vector<int>{0, 2, 3, 1});
    CHECK(v.rank_of[0] == 0);
    CHECK(v.rank_of[2] == 1);
    CHECK(v.rank_of[1] == 3);
    REQUIRE(v.tie_groups.size() == 1);
    CHECK(v.tie_groups[0] == std::vector<int>{0, 2});
    CHECK_FALSE(v.randomized);
    CHECK(v.value_at_rank({3, 1, 3, 2}, 1) == 3);
  }

  TEST_CASE("random tie-breaks are seeded and flagged") {
    auto spec = multinomial_spec(3, 8);
    CHECK_THROWS_AS(order_observation(spec, {4, 4, 0}, TieMode::random), std::invalid_argument);
    auto a = order_observation(spec, {4, 4, 0}, TieMode::random, 11);
    auto b = order_observation(spec, {4, 4, 0}, TieMode::random, 11);
    CHECK(a.order == b.order);  // same seed, same order
    CHECK(a.randomized);
    CHECK(a.order[2] == 2);  // only the tied pair is shuffled
    // an untied vector never reports a randomized break
    auto c = order_observation(spec, {5, 2, 1}, TieMode::random, 11);
    CHECK_FALSE(c.randomized);
    CHECK(c.order == std::vector<int>{0, 1, 2});
    // both resolutions of the tie appear across seeds
    bool saw01 = false, saw10 = false;
    for (std::uint64_t s = 0; s < 40; ++s) {
      auto v = order_observation(spec, {4, 4, 0}, TieMode::random, s);
      (v.order[0] == 0 ? saw01 : saw10) = true;
    }
    CHECK(saw01);
    CHECK(saw10);
  }

  TEST_CASE("gap interpretation scales") {
    CHECK(interpret_delta(multinomial_spec(3, 10), 0.07).value ==
          doctest::Approx(std::exp(0.07)).epsilon(1e-14));
    // head-to-head odds move at twice the rate of the rating gap
    CHECK(interpret_delta(bradley_terry_spec(4), 0.5).value ==
          doctest::Approx(std::exp(1.0)).epsilon(1e-14));
    CHECK(interpret_delta(multinomial_spec(3, 10), neg_inf).value == 0.0);
    CHECK_FALSE(interpret_delta(normal_variance_spec(3, 5), 0.3).label.empty());
  }
}

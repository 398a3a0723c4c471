#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rankverify/procedures.hpp"
#include "rankverify/rng.hpp"

using namespace rankverify;

namespace {

// the 2016 Iowa caucus entrance-poll style counts shipped as data/iowa.csv
const std::vector<double> kCaucus = {276, 214, 151, 71, 36, 36, 27, 18, 16, 16, 11, 16, 2};
const std::vector<std::string> kCaucusNames = {"Trump",   "Cruz",    "Rubio",  "Carson", "Paul",
                                               "Bush",    "Huckabee", "Fiorina", "Kasich",
                                               "Christie", "Santorum", "Gilmore", "Other"};

Observation caucus_obs() { return make_observation(kCaucus, kCaucusNames); }
FamilySpec caucus_spec() { return multinomial_spec(13, 890); }

}  // namespace

TEST_SUITE("procedures") {
  TEST_CASE("caucus winner test, frozen") {
    TestOptions opts;
    opts.alpha = 0.05;
    auto out = verify_winner(caucus_spec(), caucus_obs(), TieMode::lowest_index, opts);
    CHECK(out.reject);
    CHECK(out.winner_label == "Trump");
    CHECK(out.runner_up_label == "Cruz");
    CHECK(out.level_used == 0.05);
    CHECK_FALSE(out.adjusted);
    // frozen value, independently cross-checked against the two-tailed
    // conditional binomial tail of 276 vs 214 out of 490
    CHECK(out.p_value == doctest::Approx(0.0058012928414574024).epsilon(1e-12));
    CHECK_FALSE(out.conditioning.empty());
  }

  TEST_CASE("caucus gap bounds, frozen") {
    TestOptions opts;
    opts.alpha = 0.05;
    auto plain = winner_gap_bound(caucus_spec(), caucus_obs(), TieMode::lowest_index,
                                  BoundMethod::unadjusted, opts);
    CHECK(plain.delta_lower == doctest::Approx(0.0722677893936634).epsilon(1e-9));
    CHECK(plain.scale_interpretation.value == doctest::Approx(1.0749431639026277).epsilon(1e-9));
    auto selective = winner_gap_bound(caucus_spec(), caucus_obs(), TieMode::lowest_index,
                                      BoundMethod::selective, opts);
    CHECK(selective.delta_lower == doctest::Approx(0.09830425307154655).epsilon(1e-9));
    CHECK(selective.scale_interpretation.value ==
          doctest::Approx(1.1032984159794512).epsilon(1e-9));
    // conditioning on the selection event buys a strictly better bound here
    CHECK(selective.delta_lower > plain.delta_lower);
    CHECK(plain.level == 0.05);
  }

  TEST_CASE("caucus rank walk stops at the tie, frozen") {
    TestOptions opts;
    opts.alpha = 0.05;
    auto rep = verify_ranks(caucus_spec(), caucus_obs(), TieMode::lowest_index,
                            RankMethod::stepwise, opts);
    CHECK(rep.j_hat == 4);
    REQUIRE(rep.steps.size() == 12);
    const std::vector<double> frozen = {0.0058012928414574024, 0.0011444924849356732,
                                        8.380628297169168e-08, 0.0009231579958033498};
    for (std::size_t i = 0; i < frozen.size(); ++i) {
      CHECK(rep.steps[i].p == doctest::Approx(frozen[i]).epsilon(1e-9));
      CHECK(rep.steps[i].rejected);
    }
    // Paul and Bush tied at 36: the adjacent test cannot move, p is exactly one
    CHECK(rep.steps[4].upper_label == "Paul");
    CHECK(rep.steps[4].lower_label == "Bush");
    CHECK(rep.steps[4].p == 1.0);
    CHECK_FALSE(rep.steps[4].rejected);
    // later pairs still report p but stay unrejected (prefix property)
    CHECK(rep.steps[5].p == doctest::Approx(0.31350305329645484).epsilon(1e-9));
    for (std::size_t i = 4; i < rep.steps.size(); ++i) CHECK_FALSE(rep.steps[i].rejected);

    auto windowed = verify_ranks(caucus_spec(), caucus_obs(), TieMode::lowest_index,
                                 RankMethod::stepwise_windowed, opts);
    CHECK(windowed.j_hat == 4);
  }

  TEST_CASE("survey example: a 3-point lead in 20 is nowhere near significant") {
    // top of the shipped data/values.csv tallies
    auto obs = make_observation({8, 5, 3, 2, 1, 1, 0});
    TestOptions opts;
    opts.alpha = 0.05;
    auto out = verify_winner(multinomial_spec(7, 20), obs, TieMode::lowest_index, opts);
    CHECK_FALSE(out.reject);
    // 2380/4096: every term is a dyadic binomial sum over the positive half-lattice
    CHECK(out.p_value == doctest::Approx(0.5810546875).epsilon(1e-12));
  }

  TEST_CASE("selection truncation picks the strongest outside challenger") {
    auto spec = multinomial_spec(4, 29);
    std::vector<double> x = {10, 7, 9, 3};
    auto view = order_observation(spec, x, TieMode::lowest_index);
    REQUIRE(view.order == std::vector<int>{0, 2, 1, 3});
    // winner vs runner-up: the best outsider holds 7, window floor stays at 0
    auto t01 = selection_truncation(x, view, 0, 1);
    CHECK(t01.lower == 0.0);
    CHECK(t01.upper == pos_inf);
    // winner vs third place: the outsider at 9 pushes the floor to 9 - 17/2
    auto t02 = selection_truncation(x, view, 0, 2);
    CHECK(t02.lower == doctest::Approx(0.5));
    auto capped = selection_truncation(x, view, 0, 1, 2.0);
    CHECK(capped.upper == 2.0);
  }

  TEST_CASE("the winner test is the max over per-challenger tails") {
    auto spec = multinomial_spec(3, 20);
    std::vector<double> x = {9, 6, 5};
    auto view = order_observation(spec, x, TieMode::lowest_index);
    double p1 = selective_p(spec, x, view, 0, 1, 0.0);
    double p2 = selective_p(spec, x, view, 0, 2, 0.0);
    TestOptions opts;
    opts.alpha = 0.05;
    auto out = verify_winner(spec, make_observation(x), TieMode::lowest_index, opts);
    CHECK(out.p_value == doctest::Approx(std::max(p1, p2)).epsilon(1e-14));
    CHECK(max_p_combine({p1, p2}) == std::max(p1, p2));
    CHECK_THROWS_AS(max_p_combine({}), std::invalid_argument);

    // randomized: one shared uniform across the challenger tails
    TestOptions ropts;
    ropts.alpha = 0.05;
    ropts.randomized = true;
    ropts.seed = 7;
    double u = Stream(derive_seed(7, 0, Purpose::atom_split)).uniform();
    double r1 = selective_p_randomized(spec, x, view, 0, 1, 0.0, pos_inf, u);
    double r2 = selective_p_randomized(spec, x, view, 0, 2, 0.0, pos_inf, u);
    auto rout = verify_winner(spec, make_observation(x), TieMode::lowest_index, ropts);
    CHECK(rout.p_value == doctest::Approx(std::max(r1, r2)).epsilon(1e-14));
    CHECK(rout.p_value <= out.p_value + 1e-14);  // u < 1 can only shrink the tail
  }

  TEST_CASE("tied winners cannot be verified") {
    auto spec = multinomial_spec(3, 12);
    auto obs = make_observation({5, 5, 2});
    TestOptions opts;
    opts.alpha = 0.05;
    auto out = verify_winner(spec, obs, TieMode::lowest_index, opts);
    CHECK(out.p_value == 1.0);
    CHECK_FALSE(out.reject);
    // both bound flavors run off the bottom of the tilt range
    auto b2 = winner_gap_bound(multinomial_spec(2, 12), make_observation({6, 6}),
                               TieMode::lowest_index, BoundMethod::unadjusted, opts);
    CHECK(b2.delta_lower == neg_inf);
    CHECK(b2.scale_interpretation.value == 0.0);
    auto b2p = winner_gap_bound(multinomial_spec(2, 12), make_observation({6, 6}),
                                TieMode::lowest_index, BoundMethod::selective, opts);
    CHECK(b2p.delta_lower == neg_inf);
  }

  TEST_CASE("adjusted level scales by n/(n-1) and clamps at one") {
    auto spec = multinomial_spec(3, 20);
    auto obs = make_observation({9, 6, 5});
    TestOptions opts;
    opts.alpha = 0.05;
    opts.adjusted = true;
    auto out = verify_winner(spec, obs, TieMode::lowest_index, opts);
    CHECK(out.adjusted);
    CHECK(out.level_used == doctest::Approx(0.075).epsilon(1e-14));
    TestOptions big;
    big.alpha = 0.8;
    big.adjusted = true;
    auto clamped = verify_winner(multinomial_spec(2, 20), make_observation({11, 9}),
                                 TieMode::lowest_index, big);
    CHECK(clamped.level_used == 1.0);
    CHECK(clamped.reject);  // every p clears a level of one
  }

  TEST_CASE("option validation") {
    auto spec = multinomial_spec(3, 12);
    auto obs = make_observation({6, 4, 2});
    TestOptions bad;
    bad.alpha = 0.0;
    CHECK_THROWS_AS(verify_winner(spec, obs, TieMode::lowest_index, bad), std::invalid_argument);
    bad.alpha = 1.0;
    CHECK_THROWS_AS(verify_winner(spec, obs, TieMode::lowest_index, bad), std::invalid_argument);
    TestOptions no_seed;
    no_seed.alpha = 0.05;
    no_seed.randomized = true;  // entropy demanded, none provided
    CHECK_THROWS_AS(verify_winner(spec, obs, TieMode::lowest_index, no_seed),
                    std::invalid_argument);
    TestOptions ok;
    ok.alpha = 0.05;
    CHECK_THROWS_AS(verify_winner(spec, make_observation({4, 4, 4}), TieMode::random, ok),
                    std::invalid_argument);
  }

  TEST_CASE("bound and prefix nesting on a thousand random draws") {
    Stream gen(20240817);
    int finite_pairs = 0;
    for (int i = 0; i < 1000; ++i) {
      int n = 2 + int(gen.bounded(4));
      long m = 8 + long(gen.bounded(53));
      std::vector<double> th(n);
      for (auto& v : th) v = 0.8 * gen.normal();
      std::vector<double> probs(n);
      double mx = th[0];
      for (double v : th) mx = std::max(mx, v);
      for (int j = 0; j < n; ++j) probs[j] = std::exp(th[j] - mx);
      auto counts = gen.multinomial(m, probs);
      std::vector<double> x(counts.begin(), counts.end());
      auto spec = multinomial_spec(n, m);
      auto obs = make_observation(x);
      TestOptions opts;
      opts.alpha = 0.1;
      opts.seed = 1000 + i;
      auto plain = winner_gap_bound(spec, obs, TieMode::random, BoundMethod::unadjusted, opts);
      auto cond = winner_gap_bound(spec, obs, TieMode::random, BoundMethod::selective, opts);
      if (std::isfinite(plain.delta_lower)) {
        ++finite_pairs;
        // the unconditional inversion never beats the selection-aware one
        CHECK(plain.delta_lower <= cond.delta_lower + 1e-9);
      }
      auto walk = verify_ranks(spec, obs, TieMode::random, RankMethod::stepwise, opts);
      auto windowed =
          verify_ranks(spec, obs, TieMode::random, RankMethod::stepwise_windowed, opts);
      CHECK(windowed.j_hat >= walk.j_hat);
      // rejections always form a prefix
      for (std::size_t k = 0; k < walk.steps.size(); ++k)
        CHECK(walk.steps[k].rejected == (int(k) < walk.j_hat));
    }
    CHECK(finite_pairs > 200);  // the sweep actually exercises finite bounds
  }
}

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rankverify/condlaw.hpp"
#include "rankverify/logspace.hpp"

using namespace rankverify;

namespace {

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// P_U(survival_randomized(law, d, U) <= t) summed over the law itself; the
// randomized survival is documented as P(D > d) + U * P(D = d), so the
// u-measure of each atom is (t - strict_tail) / atom, clamped
double uniformity_mass(const ConditionalLaw& law, double t) {
  double total = 0.0;
  for (double d : law.d) {
    double atom = atom_mass(law, d);
    double excl = survival(law, d) - atom;
    total += atom * (atom > 0.0 ? clamp01((t - excl) / atom) : 0.0);
  }
  return total;
}

// black-box version for the two-tailed variant: integrate over a fine u grid
double two_tailed_uniformity_mass(const ConditionalLaw& law, double t, int grid) {
  double total = 0.0;
  for (double d : law.d) {
    double atom = atom_mass(law, d);
    if (atom <= 0.0) continue;
    long hits = 0;
    for (int i = 0; i < grid; ++i) {
      double u = (i + 0.5) / grid;
      if (two_tailed_p_randomized(law, d, u) <= t) ++hits;
    }
    total += atom * double(hits) / grid;
  }
  return total;
}

}  // namespace

TEST_SUITE("condlaw") {
  TEST_CASE("pair law at zero tilt is the symmetric binomial") {
    auto spec = multinomial_spec(2, 10);
    auto law = build_law(spec, {7, 3}, 0, 1, 0.0);
    REQUIRE(law.d.size() == 11);
    CHECK(law.d.front() == -5.0);
    CHECK(law.d.back() == 5.0);
    // P(D >= 2) = P(Bin(10,1/2) >= 7) = 176/1024, hand-summed
    CHECK(survival(law, 2.0) == doctest::Approx(176.0 / 1024.0).epsilon(1e-13));
    CHECK(atom_mass(law, 2.0) == doctest::Approx(120.0 / 1024.0).epsilon(1e-13));
    CHECK(two_tailed_p(law, 2.0) == doctest::Approx(352.0 / 1024.0).epsilon(1e-13));
    // symmetric law: P(D >= 0) = (1 + P(D = 0)) / 2
    CHECK(survival(law, 0.0) ==
          doctest::Approx(0.5 * (1.0 + atom_mass(law, 0.0))).epsilon(1e-13));
    CHECK(log_sum_exp(law.log_w) == doctest::Approx(0.0).epsilon(1e-12));
  }

  TEST_CASE("odd pair sums sit on the half-integer lattice") {
    auto spec = multinomial_spec(3, 12);
    auto law = build_law(spec, {6, 3, 3}, 0, 1, 0.0);
    CHECK(law.d.front() == -4.5);
    CHECK(law.d.back() == 4.5);
    REQUIRE(law.d.size() == 10);
    // zero is not a support point, so a window starting there clips cleanly
    auto clipped = build_law(spec, {6, 3, 3}, 0, 1, 0.0, Truncation{0.0, pos_inf});
    CHECK(clipped.d.front() == 0.5);
    CHECK(survival(clipped, 0.5) == 1.0);
  }

  TEST_CASE("tilting multiplies weights by exp(c delta d)") {
    struct Case {
      FamilySpec spec;
      std::vector<double> x;
    };
    std::vector<Case> cases = {
        {multinomial_spec(3, 14), {8, 4, 2}},
        {independent_binomial_spec(3, 9), {7, 4, 1}},
        {bradley_terry_spec(4), {2, 2, 1, 1}},
    };
    for (const auto& c : cases) {
      double delta = 0.45;
      auto base = build_law(c.spec, c.x, 0, 1, 0.0);
      auto tilted = build_law(c.spec, c.x, 0, 1, delta);
      REQUIRE(base.d == tilted.d);
      double slope = c.spec.tilt_factor() * delta;
      double offset = tilted.log_w[0] - base.log_w[0] - slope * base.d[0];
      for (std::size_t i = 0; i < base.d.size(); ++i)
        CHECK(tilted.log_w[i] - base.log_w[i] ==
              doctest::Approx(slope * base.d[i] + offset).epsilon(1e-9));
    }
  }

  TEST_CASE("closed form matches the generic carrier route") {
    struct Case {
      FamilySpec spec;
      std::vector<double> x;
    };
    std::vector<Case> cases = {
        {multinomial_spec(4, 18), {8, 5, 3, 2}},
        {multinomial_spec(2, 11), {9, 2}},
        {independent_binomial_spec(3, 9), {7, 4, 1}},
        {bradley_terry_spec(4), {2, 2, 1, 1}},
        {bradley_terry_spec(5), {4, 3, 2, 1, 0}},
    };
    std::vector<Truncation> windows = {
        {}, {0.5, pos_inf}, {-0.5, 1.5}, {0.0, pos_inf}, {neg_inf, 0.0}};
    for (const auto& c : cases) {
      for (auto pair : {std::pair<int, int>{0, 1}, {1, 2}}) {
        if (pair.second >= c.spec.n) continue;
        for (double delta : {-0.8, 0.0, 0.6}) {
          for (const auto& w : windows) {
            ConditionalLaw a, b;
            try {
              a = build_law(c.spec, c.x, pair.first, pair.second, delta, w);
            } catch (const std::domain_error&) {
              // empty window: the generic route must refuse identically
              CHECK_THROWS_AS(build_law_generic(c.spec, c.x, pair.first, pair.second, delta, w),
                              std::domain_error);
              continue;
            }
            b = build_law_generic(c.spec, c.x, pair.first, pair.second, delta, w);
            REQUIRE(a.d == b.d);
            for (std::size_t i = 0; i < a.d.size(); ++i)
              CHECK(a.log_w[i] == doctest::Approx(b.log_w[i]).epsilon(1e-10));
          }
        }
      }
    }
  }

  TEST_CASE("a boundary atom carries half weight") {
    auto spec = multinomial_spec(3, 16);
    std::vector<double> x = {9, 3, 4};
    auto open = build_law(spec, x, 0, 1, 0.0);
    auto cut = build_law(spec, x, 0, 1, 0.0, Truncation{1.0, pos_inf});  // d=1 is an atom
    auto shaved = build_law(spec, x, 0, 1, 0.0, Truncation{0.75, pos_inf});  // just misses it
    // relative to its neighbor, the boundary atom is halved only when the
    // window lands exactly on it
    double open_ratio = std::exp(open.log_w[7] - open.log_w[8]);    // d=1 over d=2
    CHECK(open.d[7] == 1.0);
    CHECK(cut.d.front() == 1.0);
    double cut_ratio = std::exp(cut.log_w[0] - cut.log_w[1]);
    double shaved_ratio = std::exp(shaved.log_w[0] - shaved.log_w[1]);
    CHECK(cut_ratio == doctest::Approx(0.5 * open_ratio).epsilon(1e-12));
    CHECK(shaved_ratio == doctest::Approx(open_ratio).epsilon(1e-12));
    // same at the top end
    auto capped = build_law(spec, x, 0, 1, 0.0, Truncation{neg_inf, 2.0});
    double capped_ratio = std::exp(capped.log_w.back() - capped.log_w[capped.d.size() - 2]);
    double open_top = std::exp(open.log_w[8] - open.log_w[7]);  // d=2 over d=1
    CHECK(capped_ratio == doctest::Approx(0.5 * open_top).epsilon(1e-12));
    // a window holding a single atom still normalizes
    auto point = build_law(spec, x, 0, 1, 0.0, Truncation{1.0, 1.0});
    REQUIRE(point.d.size() == 1);
    CHECK(survival(point, 1.0) == 1.0);
  }

  TEST_CASE("empty windows refuse") {
    auto spec = multinomial_spec(2, 10);
    CHECK_THROWS_AS(build_law(spec, {7, 3}, 0, 1, 0.0, Truncation{5.5, pos_inf}),
                    std::domain_error);
    CHECK_THROWS_AS(build_law(spec, {7, 3}, 0, 1, 0.0, Truncation{2.25, 2.75}),
                    std::domain_error);
  }

  TEST_CASE("survival is monotone in the tilt") {
    auto spec = multinomial_spec(3, 20);
    std::vector<double> x = {11, 6, 3};
    for (const auto& w : {Truncation{}, Truncation{0.0, pos_inf}}) {
      double prev = 0.0;
      bool first = true;
      for (double delta : {-2.0, -0.8, -0.2, 0.0, 0.3, 1.0, 2.5}) {
        auto law = build_law(spec, x, 0, 1, delta, w);
        double s = survival(law, 2.5);
        if (!first) CHECK(s >= prev - 1e-12);
        prev = s;
        first = false;
      }
    }
  }

  TEST_CASE("swapping the pair mirrors the law") {
    auto spec = multinomial_spec(3, 15);
    std::vector<double> x = {8, 4, 3};
    double delta = 0.35;
    auto fwd = build_law(spec, x, 0, 1, delta, Truncation{-1.0, 3.0});
    auto rev = build_law(spec, x, 1, 0, -delta, Truncation{-3.0, 1.0});
    REQUIRE(fwd.d.size() == rev.d.size());
    for (std::size_t i = 0; i < fwd.d.size(); ++i) {
      CHECK(fwd.d[i] == -rev.d[rev.d.size() - 1 - i]);
      CHECK(fwd.log_w[i] == doctest::Approx(rev.log_w[rev.d.size() - 1 - i]).epsilon(1e-11));
    }
  }

  TEST_CASE("randomized survival interpolates the atom and is exactly uniform") {
    auto spec = multinomial_spec(3, 18);
    auto law = build_law(spec, {10, 5, 3}, 0, 1, 0.4, Truncation{0.5, pos_inf});
    double d = 2.5;
    double atom = atom_mass(law, d);
    REQUIRE(atom > 0.0);
    CHECK(survival_randomized(law, d, 1.0) == doctest::Approx(survival(law, d)).epsilon(1e-13));
    CHECK(survival_randomized(law, d, 0.0) ==
          doctest::Approx(survival(law, d) - atom).epsilon(1e-13));
    // P(p(D, U) <= t) = t for every t: the law's own tail transform is uniform
    for (double t : {0.05, 0.3, 0.77})
      CHECK(uniformity_mass(law, t) == doctest::Approx(t).epsilon(1e-12));
    // and for an untilted untruncated law too
    auto base = build_law(spec, {10, 5, 3}, 0, 1, 0.0);
    for (double t : {0.05, 0.3, 0.77})
      CHECK(uniformity_mass(base, t) == doctest::Approx(t).epsilon(1e-12));
  }

  TEST_CASE("two-tailed randomized p is uniform as well") {
    auto spec = multinomial_spec(2, 12);
    auto sym = build_law(spec, {8, 4}, 0, 1, 0.0);
    auto skew = build_law(spec, {8, 4}, 0, 1, 0.6);
    for (double t : {0.1, 0.5}) {
      CHECK(two_tailed_uniformity_mass(sym, t, 2000) == doctest::Approx(t).epsilon(2e-3));
      CHECK(two_tailed_uniformity_mass(skew, t, 2000) == doctest::Approx(t).epsilon(2e-3));
    }
    // the non-randomized two-tailed p never exceeds one and never hits zero
    for (double d : sym.d) {
      double p = two_tailed_p(sym, d);
      CHECK(p > 0.0);
      CHECK(p <= 1.0);
    }
  }

  TEST_CASE("quantile walks the lattice") {
    auto spec = multinomial_spec(2, 10);
    auto law = build_law(spec, {7, 3}, 0, 1, 0.0);
    CHECK(quantile(law, 1e-12) == -5.0);
    CHECK(quantile(law, 1.0) == 5.0);
    CHECK(quantile(law, 0.5) == 0.0);  // CDF at 0 is (1 + atom)/2 > 1/2
    // the picked point is the smallest one whose CDF clears q
    double q = 0.9;
    double at = quantile(law, q);
    double cdf = 1.0 - survival(law, at) + atom_mass(law, at);
    CHECK(cdf >= q);
  }

  TEST_CASE("continuous family: closed Beta route against quadrature") {
    auto spec = normal_variance_spec(3, 7);
    std::vector<double> x = {4.0, 2.5, 1.1};
    for (double delta : {0.0, 0.8, -0.5}) {
      for (const auto& w : {Truncation{}, Truncation{0.4, pos_inf}, Truncation{-0.5, 2.0}}) {
        auto closed = build_law(spec, x, 0, 1, delta, w);
        auto generic = build_law_generic(spec, x, 0, 1, delta, w);
        REQUIRE(closed.continuous);
        REQUIRE(generic.continuous);
        CHECK(generic.force_quadrature);
        for (double d : {0.2, 0.75, 1.4})
          CHECK(survival(closed, d) == doctest::Approx(survival(generic, d)).epsilon(1e-9));
        CHECK(atom_mass(closed, 0.75) == 0.0);
      }
    }
    // an even group count makes the Beta shape a half-integer; still consistent
    auto even = build_law(normal_variance_spec(2, 4), {3.0, 1.5}, 0, 1, 0.0);
    auto even_gen = build_law_generic(normal_variance_spec(2, 4), {3.0, 1.5}, 0, 1, 0.0);
    CHECK(even.beta_shape == doctest::Approx(1.5));
    for (double d : {-0.4, 0.3, 1.1})
      CHECK(survival(even, d) == doctest::Approx(survival(even_gen, d)).epsilon(1e-9));
  }

  TEST_CASE("continuous symmetry at zero tilt") {
    auto spec = normal_variance_spec(2, 9);
    // equal pair values put the observed fraction at one half
    auto law = build_law(spec, {2.0, 2.0}, 0, 1, 0.0);
    CHECK(survival(law, 0.0) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(survival(law, -2.0) == doctest::Approx(1.0).epsilon(1e-12));  // the whole support
  }
}

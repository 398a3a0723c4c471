#pragma once

#include <vector>

#include "rankverify/families.hpp"
#include "rankverify/logspace.hpp"

namespace rankverify {

// Truncation window for the half-gap D = (X_j - X_k)/2, in D units, both ends
// inclusive. Finite endpoints are where the recorded order broke a tie, so a
// lattice atom sitting exactly on one carries tie-break weight 1/2.
struct Truncation {
  double lower = neg_inf;
  double upper = pos_inf;
};

// Law of D = (X_j - X_k)/2 given the pair sum s and every other coordinate,
// tilted by δ = θ_j - θ_k and truncated. Lattice families are stored as
// explicit support points with normalized log weights; the continuous family
// is a tilted symmetric Beta over the fraction B = X_j / s.
struct ConditionalLaw {
  FamilySpec spec;
  int j = 0, k = 0;  // original indices; D measures j's lead
  double s = 0.0;
  double delta = 0.0;
  Truncation trunc;

  bool continuous = false;

  // lattice representation (support ascending, logsumexp(log_w) == 0)
  std::vector<double> d;
  std::vector<double> log_w;

  // continuous representation
  double beta_shape = 0.0;   // a = (m-1)/2, from the carrier exponent (m-3)/2
  double kappa = 0.0;        // tilt coefficient on B: δ·s
  double b_lo = 0.0, b_hi = 1.0;
  bool force_quadrature = false;  // generic route: never take the Beta shortcut
};

// Closed-form route: binomial / double-binomial / tournament-count / Beta
// weights written directly. Throws std::domain_error when the truncation
// window holds no support.
ConditionalLaw build_law(const FamilySpec& spec, const std::vector<double>& x, int j, int k,
                         double delta, const Truncation& trunc = {});

// Independent route through carrier_log on whole vectors (and quadrature for
// the continuous family); used to cross-check build_law.
ConditionalLaw build_law_generic(const FamilySpec& spec, const std::vector<double>& x, int j, int k,
                                 double delta, const Truncation& trunc = {});

// P(D >= d): conservative, the atom at d counts in full (at law weight).
double survival(const ConditionalLaw& law, double d);
// P(D > d) + u * P(D = d); u ~ U(0,1) makes this exactly uniform under the law.
double survival_randomized(const ConditionalLaw& law, double d, double u);
// min(1, 2 * min(P(D >= d), P(D <= d)))
double two_tailed_p(const ConditionalLaw& law, double d);
// complementary atom split: the two tails sum to one before doubling
double two_tailed_p_randomized(const ConditionalLaw& law, double d, double u);
// smallest support point (lattice) or real (continuous) with CDF >= q
double quantile(const ConditionalLaw& law, double q);
// law mass exactly at d (0 for the continuous family)
double atom_mass(const ConditionalLaw& law, double d);

}  // namespace rankverify

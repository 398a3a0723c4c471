#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rankverify {

// Permutation-symmetric exponential families p(x) ∝ exp(c·θ'x)·g(x) with a
// Schur-concave carrier g. The log-partition never needs evaluating: every
// inference here conditions on enough to make it cancel.
enum class Family {
  multinomial,           // counts on the simplex, carrier 1/∏ x_j!
  independent_binomial,  // counts in [0, m]^n, carrier ∏ C(m, x_j)
  normal_variance,       // positive reals, carrier ∏ r_j^{(m-3)/2}
  bradley_terry,         // round-robin win totals, carrier = tournament count
};

struct FamilySpec {
  Family family = Family::multinomial;
  int n = 0;   // number of populations
  long m = 0;  // total count / trials per arm / observations per group; C(n,2) games for round-robin

  bool lattice() const { return family != Family::normal_variance; }
  // coefficient c on θ'x in the density; the win-total family uses 2
  double tilt_factor() const { return family == Family::bradley_terry ? 2.0 : 1.0; }
  std::string family_name() const;
};

FamilySpec multinomial_spec(int n, long m);
FamilySpec independent_binomial_spec(int n, long m);
FamilySpec normal_variance_spec(int n, long m);
FamilySpec bradley_terry_spec(int n);

// throws std::invalid_argument when the spec itself is malformed
void validate_spec(const FamilySpec& spec);
// throws std::invalid_argument when x is not a legal observation for spec
void validate(const FamilySpec& spec, const std::vector<double>& x);

// log g(x); -inf off support (never throws for finite numeric input)
double carrier_log(const FamilySpec& spec, const std::vector<double>& x);

struct NaturalParams {
  std::vector<double> theta;
};

struct Observation {
  std::vector<double> values;
  std::vector<std::string> labels;
};

// fills default labels pop1..popN, enforces uniqueness and matching sizes
Observation make_observation(std::vector<double> values, std::vector<std::string> labels = {});

enum class TieMode { lowest_index, random };

struct OrderedView {
  std::vector<int> order;                    // rank -> original index, values descending
  std::vector<int> rank_of;                  // original index -> rank
  std::vector<std::vector<int>> tie_groups;  // maximal groups (size >= 2) of equal values
  bool randomized = false;                   // a random draw actually resolved a tie

  double value_at_rank(const std::vector<double>& x, int r) const { return x[order[r]]; }
};

// Records one total order consistent with the observed values. Ties are
// broken by lowest original index or by a seeded uniform draw; random mode
// without a seed is an error (no hidden entropy).
OrderedView order_observation(const FamilySpec& spec, const std::vector<double>& x, TieMode mode,
                              std::optional<std::uint64_t> seed = std::nullopt);

struct DeltaScale {
  double value = 1.0;  // exp(c·δ)
  std::string label;
};

// The gap δ = θ_j - θ_k rendered on the family's natural comparison scale.
DeltaScale interpret_delta(const FamilySpec& spec, double delta);

}  // namespace rankverify

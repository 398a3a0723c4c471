#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rankverify/families.hpp"

namespace rankverify {

// Majorization compares how evenly two vectors with equal totals spread their
// mass: a ⪰ b when every descending prefix sum of a weakly dominates b's.
enum class MajDirection {
  first_over_second,
  second_over_first,
  equal_up_to_permutation,
  incomparable,
};

struct MajorizationVerdict {
  MajDirection direction = MajDirection::incomparable;
  bool comparable() const { return direction != MajDirection::incomparable; }
};

// Integer-valued inputs are compared with exact integer prefix sums; real
// inputs use the tolerance. Unequal totals are incomparable.
MajorizationVerdict majorizes(const std::vector<double>& a, const std::vector<double>& b,
                              double tol = 1e-12);

// Robin Hood transfer: move amount from the larger coordinate toward the
// smaller one. The result is majorized by x (strictly, unless amount is 0).
// Requires x[from] >= x[to] + 2*amount and amount >= 0.
std::vector<double> transfer(const std::vector<double>& x, int from, int to, double amount);

struct SchurCheckReport {
  bool passed = true;
  long probes = 0;
  std::string first_violation;  // empty when passed
};

// Probes f for Schur-concavity: for points x and coordinate pairs with
// x_i > x_j, moving mass from i toward j must not decrease log f. A drop to
// -inf at a more even point is a violation like any other.
SchurCheckReport check_schur_concave(const std::function<double(const std::vector<double>&)>& log_f,
                                     const std::vector<std::vector<double>>& points,
                                     double tol = 1e-9);

// Same probe logic against a shipped carrier; points are enumerated for small
// lattice supports and sampled from a seeded stream otherwise.
SchurCheckReport check_schur_concave(const FamilySpec& spec, long max_probes, std::uint64_t seed,
                                     double tol = 1e-9);

}  // namespace rankverify

#pragma once

#include <vector>

#include "rankverify/families.hpp"

namespace rankverify {

// Subset-selection baseline for multinomial counts: keep every population
// within d of the leader, with d calibrated so the subset captures the best
// population with probability at least 1 - α. The least favorable case is two
// tied candidates, so d comes from the symmetric binomial difference.
struct SubsetRule {
  long d = 0;
  long m = 0;
  int n = 0;
  double alpha = 0.0;
};

// smallest integer d with P(m - 2·Bin(m, 1/2) > d) <= alpha, by exact tail sums
long gupta_nagel_d(long m, double alpha);

SubsetRule gupta_nagel_rule(const FamilySpec& spec, double alpha);

// original indices with x_j >= max(x) - d, ascending
std::vector<int> gupta_nagel_subset(const SubsetRule& rule, const std::vector<double>& x);

struct WinnerDecision {
  bool declared = false;  // subset is a singleton: the leader stands alone by more than d
  std::vector<int> subset;
};

WinnerDecision gn_winner_test(const SubsetRule& rule, const std::vector<double>& x);

}  // namespace rankverify

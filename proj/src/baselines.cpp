#include "rankverify/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace rankverify {

long gupta_nagel_d(long m, double alpha) {
  if (m < 1) throw std::invalid_argument("subset rule needs at least one trial");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie strictly between 0 and 1");

  // P(B <= t) for B ~ Bin(m, 1/2), summed small-to-large so nothing drowns
  std::vector<double> cdf(static_cast<std::size_t>(m) + 1);
  double log_norm = static_cast<double>(m) * std::log(2.0);
  double log_c = 0.0, acc = 0.0;
  for (long i = 0; i <= m; ++i) {
    if (i > 0) log_c += std::log(static_cast<double>(m - i + 1)) - std::log(static_cast<double>(i));
    acc += std::exp(log_c - log_norm);
    cdf[static_cast<std::size_t>(i)] = std::min(acc, 1.0);
  }

  // m - 2B > d  <=>  B <= floor((m - d - 1) / 2); the tail is decreasing in d
  for (long d = -m; d <= m; ++d) {
    long num = m - d - 1;
    double tail = 0.0;
    if (num >= 0) tail = cdf[static_cast<std::size_t>(std::min(num / 2, m))];
    if (tail <= alpha) return d;
  }
  return m;  // unreachable: the tail at d = m is zero
}

SubsetRule gupta_nagel_rule(const FamilySpec& spec, double alpha) {
  validate_spec(spec);
  if (spec.family != Family::multinomial)
    throw std::invalid_argument("the subset baseline is defined for multinomial counts");
  SubsetRule rule;
  rule.d = gupta_nagel_d(spec.m, alpha);
  rule.m = spec.m;
  rule.n = spec.n;
  rule.alpha = alpha;
  return rule;
}

std::vector<int> gupta_nagel_subset(const SubsetRule& rule, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != rule.n)
    throw std::invalid_argument("observation length does not match the subset rule");
  double cut = *std::max_element(x.begin(), x.end()) - static_cast<double>(rule.d);
  std::vector<int> subset;
  for (int i = 0; i < rule.n; ++i)
    if (x[static_cast<std::size_t>(i)] >= cut) subset.push_back(i);
  return subset;
}

WinnerDecision gn_winner_test(const SubsetRule& rule, const std::vector<double>& x) {
  WinnerDecision out;
  out.subset = gupta_nagel_subset(rule, x);
  out.declared = out.subset.size() == 1;
  return out;
}

}  // namespace rankverify

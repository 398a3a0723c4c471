#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rankverify/condlaw.hpp"
#include "rankverify/families.hpp"

namespace rankverify {

struct TestOptions {
  double alpha = 0.05;
  bool adjusted = false;    // run at level min(1, n/(n-1) * alpha)
  bool randomized = false;  // atom-splitting uniform instead of the conservative tail
  std::optional<std::uint64_t> seed;  // required when randomized or ties break randomly
};

struct TestOutcome {
  bool reject = false;
  double p_value = 1.0;
  double level_used = 0.0;
  bool adjusted = false;
  std::string winner_label, runner_up_label;
  std::string conditioning;  // human-readable statement of what was held fixed
  std::optional<std::uint64_t> seed_trace;
  OrderedView ordered;
};

// max combiner for the per-challenger selective p-values; empty input is an error
double max_p_combine(const std::vector<double>& ps);

// Selective p-value for the pair at ranks (rank_a, rank_b), rank_a above:
// upper tail of D's conditional law at tilt delta, truncated below by the
// recorded selection (the best coordinate outside the pair) and above by
// upper_trunc. Conservative tail; pass u in [0,1) via the randomized variant.
double selective_p(const FamilySpec& spec, const std::vector<double>& x, const OrderedView& ordered,
                   int rank_a, int rank_b, double delta, double upper_trunc = pos_inf);
double selective_p_randomized(const FamilySpec& spec, const std::vector<double>& x,
                              const OrderedView& ordered, int rank_a, int rank_b, double delta,
                              double upper_trunc, double u);

// Does the observed winner really have the largest θ? Tests the winner
// against every challenger on the selection-truncated conditional law at
// δ = 0 and combines by maximum (the runner-up attains it).
TestOutcome verify_winner(const FamilySpec& spec, const Observation& obs, TieMode tie_mode,
                          const TestOptions& opts);

enum class BoundMethod {
  unadjusted,  // inverts the plain pair test at α/2 per tail; floors at -inf below 0
  selective,   // inverts the selection-truncated tilted test at α
};

struct BoundOutcome {
  double delta_lower = neg_inf;  // 1-α lower confidence bound for θ_winner - θ_runner_up
  DeltaScale scale_interpretation;
  BoundMethod method = BoundMethod::selective;
  double level = 0.0;
  std::string winner_label, runner_up_label;
  OrderedView ordered;
};

BoundOutcome winner_gap_bound(const FamilySpec& spec, const Observation& obs, TieMode tie_mode,
                              BoundMethod method, const TestOptions& opts);

enum class RankMethod {
  stepwise,           // each step tests the next adjacent pair, no upper window
  stepwise_windowed,  // additionally conditions each step on sitting below the rank above
};

struct RankStep {
  int rank_upper = 0, rank_lower = 0;  // 0-based ranks of the tested pair
  std::string upper_label, lower_label;
  double p = 1.0;
  bool rejected = false;  // true only within the verified prefix
};

struct RankReport {
  int j_hat = 0;  // number of leading ranks verified in order
  std::vector<RankStep> steps;
  RankMethod method = RankMethod::stepwise;
  OrderedView ordered;
  std::optional<std::uint64_t> seed_trace;
};

// Walks down the recorded order, testing each adjacent pair at level α until
// the first failure; p-values for the remaining pairs are still reported but
// rejections always form a prefix.
RankReport verify_ranks(const FamilySpec& spec, const Observation& obs, TieMode tie_mode,
                        RankMethod method, const TestOptions& opts);

// The lower truncation implied by the recorded selection for the pair at
// ranks (rank_a, rank_b): D >= max(0, X_next - s/2) with X_next the largest
// value at ranks below rank_a outside the pair. Exposed for tests.
Truncation selection_truncation(const std::vector<double>& x, const OrderedView& ordered,
                                int rank_a, int rank_b, double upper_trunc = pos_inf);

}  // namespace rankverify

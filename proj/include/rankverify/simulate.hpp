#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rankverify/families.hpp"
#include "rankverify/procedures.hpp"

namespace rankverify {

// Monte Carlo and exact-enumeration harness. Every trial derives its own
// streams from (master_seed, trial, purpose), so results are bit-identical
// for any worker count.

struct PowerPoint {
  double delta = 0.0;
  double power_selective = 0.0, power_gn = 0.0;
  double se_selective = 0.0, se_gn = 0.0;
};

// Multinomial(m, π ∝ (e^δ, 1, ..., 1)) per grid point; selective = winner
// verification at level n/(n-1)·α with population 1 declared best, baseline =
// singleton subset rule at level α.
std::vector<PowerPoint> power_curve(long m, int n, const std::vector<double>& delta_grid,
                                    double alpha, long trials, std::uint64_t master_seed,
                                    int jobs = 1);

inline std::vector<double> default_delta_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 12; ++i) g.push_back(0.25 * i);
  return g;
}

enum class Experiment { conditional_error, marginal_error, fwer, coverage };

struct SimConfig {
  FamilySpec spec;
  std::vector<double> theta;
  Experiment experiment = Experiment::conditional_error;
  double alpha = 0.05;
  long trials = 10000;
  std::uint64_t master_seed = 1;
  int jobs = 1;
  bool randomized = true;
  bool adjusted = false;
  RankMethod rank_method = RankMethod::stepwise;      // fwer
  BoundMethod bound_method = BoundMethod::selective;  // coverage
};

struct SimResult {
  double estimate = 0.0;
  double std_error = 0.0;
  long trials = 0;
  long events = 0;           // trials contributing to the estimate
  bool low_precision = false;  // fewer than 100 contributing events
  std::vector<std::pair<std::string, double>> breakdown;
};

// conditional_error: P(reject | best not winning); marginal_error:
// P(reject and winner is not best); fwer: P(declared prefix exceeds the true
// one under the recorded order). "Best" means the lowest-index argmax of θ.
SimResult error_rate_sim(const SimConfig& config);

// P(reported lower bound <= θ_winner - max other θ), winner data-dependent.
SimResult coverage_sim(const SimConfig& config);

// Full enumeration of a small lattice support with exact probabilities and
// exact tie-break/randomization measure: no Monte Carlo error anywhere.
class ExhaustiveOracle {
 public:
  // throws std::domain_error (with a size estimate) beyond 10^7 outcomes
  ExhaustiveOracle(const FamilySpec& spec, const std::vector<double>& theta);

  struct Outcome {
    std::vector<double> x;
    double prob;
  };

  const std::vector<Outcome>& outcomes() const { return outcomes_; }
  const FamilySpec& spec() const { return spec_; }

  // enumerate recorded orders: fn(outcome, ordered, order_weight) where
  // order_weight is 1/#orders consistent with the tie pattern
  void for_each_order(
      const std::function<void(const Outcome&, const OrderedView&, double)>& fn) const;

  double winner_prob(int population) const;  // recorded winner == population
  double best_win_rate() const;              // recorded winner == best

  // exact rejection measure of the (optionally randomized) winner test
  double conditional_type1(double alpha, bool adjusted, bool randomized) const;
  double marginal_error(double alpha, bool adjusted, bool randomized) const;

  // largest violation of p(winner, runner-up) >= p(winner, j) over all
  // outcomes, orders, and the given tilts; <= 0 means the ordering holds
  double worst_runner_up_gap(const std::vector<double>& tilts) const;

  // exact P(lower bound > true winner gap) for the randomized bound
  double noncoverage_exact(double alpha, BoundMethod method) const;

  int best_population() const { return best_; }

 private:
  FamilySpec spec_;
  std::vector<double> theta_;
  std::vector<Outcome> outcomes_;
  int best_ = 0;
};

// deterministic parallel map: results land in trial order no matter the jobs
void run_trials(long trials, int jobs, const std::function<void(long)>& per_trial);

}  // namespace rankverify

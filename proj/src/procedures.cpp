#include "rankverify/procedures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rankverify/rng.hpp"

namespace rankverify {

namespace {

void validate_options(const TestOptions& opts) {
  if (!(opts.alpha > 0.0 && opts.alpha < 1.0))
    throw std::invalid_argument("alpha must lie strictly between 0 and 1");
  if (opts.randomized && !opts.seed)
    throw std::invalid_argument("randomized p-values require a seed");
}

std::optional<std::uint64_t> tie_seed_for(TieMode mode, const TestOptions& opts) {
  if (mode != TieMode::random) return std::nullopt;
  if (!opts.seed) throw std::invalid_argument("random tie-breaking requires a seed");
  return derive_seed(*opts.seed, 0, Purpose::tie_break);
}

double observed_gap(const std::vector<double>& x, const OrderedView& ordered, int rank_a,
                    int rank_b) {
  return (x[ordered.order[rank_a]] - x[ordered.order[rank_b]]) / 2.0;
}

}  // namespace

double max_p_combine(const std::vector<double>& ps) {
  if (ps.empty()) throw std::invalid_argument("max_p_combine: no p-values to combine");
  return *std::max_element(ps.begin(), ps.end());
}

Truncation selection_truncation(const std::vector<double>& x, const OrderedView& ordered,
                                int rank_a, int rank_b, double upper_trunc) {
  int n = static_cast<int>(x.size());
  double s = x[ordered.order[rank_a]] + x[ordered.order[rank_b]];
  double next = neg_inf;
  for (int r = rank_a + 1; r < n; ++r) {
    if (r == rank_b) continue;
    next = ordered.value_at_rank(x, r);  // order is descending: first hit is the max
    break;
  }
  Truncation trunc;
  trunc.lower = std::max(0.0, next - s / 2.0);
  trunc.upper = upper_trunc;
  return trunc;
}

double selective_p(const FamilySpec& spec, const std::vector<double>& x, const OrderedView& ordered,
                   int rank_a, int rank_b, double delta, double upper_trunc) {
  int j = ordered.order[rank_a], k = ordered.order[rank_b];
  ConditionalLaw law =
      build_law(spec, x, j, k, delta, selection_truncation(x, ordered, rank_a, rank_b, upper_trunc));
  return survival(law, observed_gap(x, ordered, rank_a, rank_b));
}

double selective_p_randomized(const FamilySpec& spec, const std::vector<double>& x,
                              const OrderedView& ordered, int rank_a, int rank_b, double delta,
                              double upper_trunc, double u) {
  int j = ordered.order[rank_a], k = ordered.order[rank_b];
  ConditionalLaw law =
      build_law(spec, x, j, k, delta, selection_truncation(x, ordered, rank_a, rank_b, upper_trunc));
  return survival_randomized(law, observed_gap(x, ordered, rank_a, rank_b), u);
}

TestOutcome verify_winner(const FamilySpec& spec, const Observation& obs, TieMode tie_mode,
                          const TestOptions& opts) {
  validate_options(opts);
  validate(spec, obs.values);
  OrderedView ordered = order_observation(spec, obs.values, tie_mode, tie_seed_for(tie_mode, opts));

  // One shared atom-splitting uniform across all challenger pairs: the max of
  // the per-pair p-values stays a monotone function of a single draw.
  double u = 1.0;
  if (opts.randomized) u = Stream(derive_seed(*opts.seed, 0, Purpose::atom_split)).uniform();

  std::vector<double> ps;
  ps.reserve(static_cast<std::size_t>(spec.n) - 1);
  for (int r = 1; r < spec.n; ++r) {
    if (opts.randomized)
      ps.push_back(selective_p_randomized(spec, obs.values, ordered, 0, r, 0.0, pos_inf, u));
    else
      ps.push_back(selective_p(spec, obs.values, ordered, 0, r, 0.0, pos_inf));
  }

  TestOutcome out;
  out.p_value = max_p_combine(ps);
  out.adjusted = opts.adjusted;
  out.level_used =
      opts.adjusted ? std::min(1.0, opts.alpha * spec.n / (spec.n - 1.0)) : opts.alpha;
  out.reject = out.p_value <= out.level_used;
  out.winner_label = obs.labels[ordered.order[0]];
  out.runner_up_label = obs.labels[ordered.order[1]];
  out.conditioning = "each pair's sum, every value outside the pair, and " + out.winner_label +
                     "'s recorded first place";
  out.seed_trace = opts.seed;
  out.ordered = ordered;
  return out;
}

namespace {

// p as a function of the tilt, with the atom at the observed gap weighted by
// u (1 recovers the conservative tail, 1/2 the mid-tail).
double tilted_p(const FamilySpec& spec, const std::vector<double>& x, int j, int k, double delta,
                const Truncation& trunc, double d_obs, double u) {
  ConditionalLaw law = build_law(spec, x, j, k, delta, trunc);
  return u == 1.0 ? survival(law, d_obs) : survival_randomized(law, d_obs, u);
}

// The p-value above is nondecreasing in delta for every fixed u, so the
// confidence set {delta : p > target} is an interval reaching +inf; its left
// edge comes out of plain bisection.
double invert_tilt(const FamilySpec& spec, const std::vector<double>& x, int j, int k,
                   const Truncation& trunc, double d_obs, double u, double target) {
  constexpr double kRange = 64.0, kWidth = 1e-8;
  auto f = [&](double delta) { return tilted_p(spec, x, j, k, delta, trunc, d_obs, u) - target; };
  if (f(-kRange) > 0.0) return neg_inf;
  if (f(kRange) <= 0.0) return pos_inf;
  double lo = -1.0, hi = 1.0;
  while (lo > -kRange && f(lo) > 0.0) lo = std::max(-kRange, lo * 2.0);
  while (hi < kRange && f(hi) <= 0.0) hi = std::min(kRange, hi * 2.0);
  while (hi - lo > kWidth) {
    double mid = 0.5 * (lo + hi);
    (f(mid) <= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

BoundOutcome winner_gap_bound(const FamilySpec& spec, const Observation& obs, TieMode tie_mode,
                              BoundMethod method, const TestOptions& opts) {
  validate_options(opts);
  validate(spec, obs.values);
  OrderedView ordered = order_observation(spec, obs.values, tie_mode, tie_seed_for(tie_mode, opts));

  int j = ordered.order[0], k = ordered.order[1];
  double d_obs = observed_gap(obs.values, ordered, 0, 1);

  double u;
  if (opts.randomized)
    u = Stream(derive_seed(*opts.seed, 0, Purpose::atom_split)).uniform();
  else
    u = method == BoundMethod::unadjusted ? 1.0 : 0.5;

  double root;
  if (method == BoundMethod::unadjusted) {
    // plain two-sided pair test, upper tail at alpha/2, no conditioning on the
    // selection; a negative root says nothing a sign constraint didn't already
    root = invert_tilt(spec, obs.values, j, k, Truncation{}, d_obs, u, opts.alpha / 2.0);
    if (root < 0.0) root = neg_inf;
  } else {
    root = invert_tilt(spec, obs.values, j, k, selection_truncation(obs.values, ordered, 0, 1),
                       d_obs, u, opts.alpha);
  }

  BoundOutcome out;
  out.delta_lower = root;
  out.scale_interpretation = interpret_delta(spec, root);
  out.method = method;
  out.level = opts.alpha;
  out.winner_label = obs.labels[j];
  out.runner_up_label = obs.labels[k];
  out.ordered = ordered;
  return out;
}

RankReport verify_ranks(const FamilySpec& spec, const Observation& obs, TieMode tie_mode,
                        RankMethod method, const TestOptions& opts) {
  validate_options(opts);
  validate(spec, obs.values);
  OrderedView ordered = order_observation(spec, obs.values, tie_mode, tie_seed_for(tie_mode, opts));

  RankReport report;
  report.method = method;
  report.ordered = ordered;
  report.seed_trace = opts.seed;

  bool alive = true;
  for (int r = 0; r + 1 < spec.n; ++r) {
    double upper = pos_inf;
    if (method == RankMethod::stepwise_windowed && r >= 1) {
      double s = obs.values[ordered.order[r]] + obs.values[ordered.order[r + 1]];
      upper = ordered.value_at_rank(obs.values, r - 1) - s / 2.0;
    }
    double p;
    if (opts.randomized) {
      double u = Stream(derive_seed(*opts.seed, static_cast<std::uint64_t>(r), Purpose::atom_split))
                     .uniform();
      p = selective_p_randomized(spec, obs.values, ordered, r, r + 1, 0.0, upper, u);
    } else {
      p = selective_p(spec, obs.values, ordered, r, r + 1, 0.0, upper);
    }

    RankStep step;
    step.rank_upper = r;
    step.rank_lower = r + 1;
    step.upper_label = obs.labels[ordered.order[r]];
    step.lower_label = obs.labels[ordered.order[r + 1]];
    step.p = p;
    step.rejected = alive && p <= opts.alpha;
    if (!step.rejected) alive = false;
    if (step.rejected) ++report.j_hat;
    report.steps.push_back(std::move(step));
  }
  return report;
}

}  // namespace rankverify

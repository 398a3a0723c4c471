#include "rankverify/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "rankverify/baselines.hpp"
#include "rankverify/logspace.hpp"
#include "rankverify/rng.hpp"

namespace rankverify {

void run_trials(long trials, int jobs, const std::function<void(long)>& per_trial) {
  if (trials < 0) throw std::invalid_argument("trial count cannot be negative");
  jobs = std::max(1, jobs);
  if (jobs == 1 || trials < 2) {
    for (long t = 0; t < trials; ++t) per_trial(t);
    return;
  }
  jobs = static_cast<int>(std::min<long>(jobs, trials));
  long chunk = (trials + jobs - 1) / jobs;
  std::vector<std::thread> pool;
  std::mutex mu;
  std::exception_ptr err;
  for (int w = 0; w < jobs; ++w) {
    long lo = static_cast<long>(w) * chunk, hi = std::min(trials, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (long t = lo; t < hi; ++t) per_trial(t);
      } catch (...) {
        std::lock_guard<std::mutex> guard(mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double binom_se(double phat, long count) {
  return count > 0 ? std::sqrt(phat * (1.0 - phat) / static_cast<double>(count)) : 0.0;
}

int best_of(const std::vector<double>& theta) {
  return static_cast<int>(std::max_element(theta.begin(), theta.end()) - theta.begin());
}

// Marsaglia-Tsang; the boost through shape+1 keeps shape < 1 exact
double gamma_draw(Stream& stream, double shape) {
  if (shape < 1.0) {
    double u;
    do {
      u = stream.uniform();
    } while (u <= 0.0);
    return gamma_draw(stream, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0, c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double z = stream.normal();
    double v = 1.0 + c * z;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = stream.uniform();
    if (u < 1.0 - 0.0331 * z * z * z * z) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::vector<double> draw_observation(const FamilySpec& spec, const std::vector<double>& theta,
                                     Stream& stream) {
  std::vector<double> x(static_cast<std::size_t>(spec.n), 0.0);
  switch (spec.family) {
    case Family::multinomial: {
      double top = *std::max_element(theta.begin(), theta.end());
      std::vector<double> w(theta.size());
      for (std::size_t i = 0; i < theta.size(); ++i) w[i] = std::exp(theta[i] - top);
      std::vector<long> counts = stream.multinomial(spec.m, w);
      for (std::size_t i = 0; i < counts.size(); ++i) x[i] = static_cast<double>(counts[i]);
      break;
    }
    case Family::independent_binomial: {
      for (int i = 0; i < spec.n; ++i) {
        double p = 1.0 / (1.0 + std::exp(-theta[static_cast<std::size_t>(i)]));
        x[static_cast<std::size_t>(i)] = static_cast<double>(stream.binomial(spec.m, p));
      }
      break;
    }
    case Family::normal_variance: {
      double shape = (static_cast<double>(spec.m) - 1.0) / 2.0;
      for (int i = 0; i < spec.n; ++i)
        x[static_cast<std::size_t>(i)] =
            gamma_draw(stream, shape) / -theta[static_cast<std::size_t>(i)];
      break;
    }
    case Family::bradley_terry: {
      for (int i = 0; i < spec.n; ++i)
        for (int j = i + 1; j < spec.n; ++j) {
          double p = 1.0 / (1.0 + std::exp(-2.0 * (theta[static_cast<std::size_t>(i)] -
                                                   theta[static_cast<std::size_t>(j)])));
          if (stream.uniform() < p)
            x[static_cast<std::size_t>(i)] += 1.0;
          else
            x[static_cast<std::size_t>(j)] += 1.0;
        }
      break;
    }
  }
  return x;
}

void validate_theta(const FamilySpec& spec, const std::vector<double>& theta) {
  if (static_cast<int>(theta.size()) != spec.n)
    throw std::invalid_argument("theta length must match the number of populations");
  for (double v : theta)
    if (!std::isfinite(v)) throw std::invalid_argument("theta must be finite");
  if (spec.family == Family::normal_variance)
    for (double v : theta)
      if (v >= 0.0)
        throw std::invalid_argument(
            "inverse-variance natural parameters must be negative to sample");
}

void validate_config(const SimConfig& config) {
  validate_spec(config.spec);
  validate_theta(config.spec, config.theta);
  if (config.trials < 1) throw std::invalid_argument("trials must be positive");
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw std::invalid_argument("alpha must lie strictly between 0 and 1");
}

// Longest leading run of the recorded order that the true parameters actually
// rank correctly: strictly decreasing prefix whose last member strictly beats
// everything after it. Claims past this length are false.
long true_prefix(const std::vector<double>& theta, const OrderedView& ordered) {
  int n = static_cast<int>(theta.size());
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) t[static_cast<std::size_t>(r)] = theta[ordered.order[r]];
  std::vector<double> suffix_max(static_cast<std::size_t>(n), neg_inf);
  for (int r = n - 2; r >= 0; --r)
    suffix_max[static_cast<std::size_t>(r)] =
        std::max(t[static_cast<std::size_t>(r + 1)], suffix_max[static_cast<std::size_t>(r + 1)]);
  long j0 = 0;
  for (int j = 1; j <= n - 1; ++j) {
    if (j >= 2 && !(t[static_cast<std::size_t>(j - 2)] > t[static_cast<std::size_t>(j - 1)]))
      break;
    if (!(t[static_cast<std::size_t>(j - 1)] > suffix_max[static_cast<std::size_t>(j - 1)])) break;
    j0 = j;
  }
  return j0;
}

}  // namespace

std::vector<PowerPoint> power_curve(long m, int n, const std::vector<double>& delta_grid,
                                    double alpha, long trials, std::uint64_t master_seed,
                                    int jobs) {
  if (delta_grid.empty()) throw std::invalid_argument("the delta grid must not be empty");
  if (trials < 1) throw std::invalid_argument("trials must be positive");
  FamilySpec spec = multinomial_spec(n, m);
  SubsetRule rule = gupta_nagel_rule(spec, alpha);

  std::vector<PowerPoint> table;
  table.reserve(delta_grid.size());
  for (std::size_t gi = 0; gi < delta_grid.size(); ++gi) {
    double delta = delta_grid[gi];
    std::uint64_t grid_seed = derive_seed(master_seed, gi, Purpose::scratch);
    std::vector<double> theta(static_cast<std::size_t>(n), 0.0);
    theta[0] = delta;

    std::vector<std::uint8_t> hit_sel(static_cast<std::size_t>(trials), 0);
    std::vector<std::uint8_t> hit_gn(static_cast<std::size_t>(trials), 0);
    run_trials(trials, jobs, [&](long t) {
      Stream data(derive_seed(grid_seed, static_cast<std::uint64_t>(t), Purpose::data));
      std::vector<double> x = draw_observation(spec, theta, data);
      TestOptions opts;
      opts.alpha = alpha;
      opts.adjusted = true;
      opts.randomized = false;
      opts.seed = derive_seed(grid_seed, static_cast<std::uint64_t>(t), Purpose::scratch);
      TestOutcome out = verify_winner(spec, make_observation(x), TieMode::random, opts);
      hit_sel[static_cast<std::size_t>(t)] = out.reject && out.ordered.order[0] == 0;
      WinnerDecision gn = gn_winner_test(rule, x);
      hit_gn[static_cast<std::size_t>(t)] = gn.declared && gn.subset[0] == 0;
    });

    long k_sel = std::accumulate(hit_sel.begin(), hit_sel.end(), 0L);
    long k_gn = std::accumulate(hit_gn.begin(), hit_gn.end(), 0L);
    PowerPoint point;
    point.delta = delta;
    point.power_selective = static_cast<double>(k_sel) / static_cast<double>(trials);
    point.power_gn = static_cast<double>(k_gn) / static_cast<double>(trials);
    point.se_selective = binom_se(point.power_selective, trials);
    point.se_gn = binom_se(point.power_gn, trials);
    table.push_back(point);
  }
  return table;
}

SimResult error_rate_sim(const SimConfig& config) {
  validate_config(config);
  int best = best_of(config.theta);
  long trials = config.trials;

  SimResult out;
  out.trials = trials;

  if (config.experiment == Experiment::conditional_error ||
      config.experiment == Experiment::marginal_error) {
    std::vector<std::uint8_t> wrong(static_cast<std::size_t>(trials), 0);
    std::vector<std::uint8_t> reject(static_cast<std::size_t>(trials), 0);
    run_trials(trials, config.jobs, [&](long t) {
      Stream data(derive_seed(config.master_seed, static_cast<std::uint64_t>(t), Purpose::data));
      std::vector<double> x = draw_observation(config.spec, config.theta, data);
      TestOptions opts;
      opts.alpha = config.alpha;
      opts.adjusted = config.adjusted;
      opts.randomized = config.randomized;
      opts.seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(t), Purpose::scratch);
      TestOutcome res = verify_winner(config.spec, make_observation(x), TieMode::random, opts);
      wrong[static_cast<std::size_t>(t)] = res.ordered.order[0] != best;
      reject[static_cast<std::size_t>(t)] = res.reject;
    });

    long n_wrong = 0, n_reject_wrong = 0;
    for (long t = 0; t < trials; ++t) {
      n_wrong += wrong[static_cast<std::size_t>(t)];
      n_reject_wrong +=
          wrong[static_cast<std::size_t>(t)] && reject[static_cast<std::size_t>(t)];
    }
    if (config.experiment == Experiment::conditional_error) {
      out.events = n_wrong;
      out.estimate = n_wrong > 0
                         ? static_cast<double>(n_reject_wrong) / static_cast<double>(n_wrong)
                         : std::nan("");
      out.std_error = binom_se(out.estimate, n_wrong);
      out.breakdown.emplace_back("conditioning_rate",
                                 static_cast<double>(n_wrong) / static_cast<double>(trials));
    } else {
      out.events = trials;
      out.estimate = static_cast<double>(n_reject_wrong) / static_cast<double>(trials);
      out.std_error = binom_se(out.estimate, trials);
      out.breakdown.emplace_back("winner_not_best_rate",
                                 static_cast<double>(n_wrong) / static_cast<double>(trials));
    }
  } else if (config.experiment == Experiment::fwer) {
    std::vector<std::uint8_t> err(static_cast<std::size_t>(trials), 0);
    std::vector<long> claimed(static_cast<std::size_t>(trials), 0);
    std::vector<long> truth(static_cast<std::size_t>(trials), 0);
    run_trials(trials, config.jobs, [&](long t) {
      Stream data(derive_seed(config.master_seed, static_cast<std::uint64_t>(t), Purpose::data));
      std::vector<double> x = draw_observation(config.spec, config.theta, data);
      TestOptions opts;
      opts.alpha = config.alpha;
      opts.randomized = config.randomized;
      opts.seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(t), Purpose::scratch);
      RankReport report =
          verify_ranks(config.spec, make_observation(x), TieMode::random, config.rank_method, opts);
      long j0 = true_prefix(config.theta, report.ordered);
      claimed[static_cast<std::size_t>(t)] = report.j_hat;
      truth[static_cast<std::size_t>(t)] = j0;
      err[static_cast<std::size_t>(t)] = report.j_hat > j0;
    });
    long k = std::accumulate(err.begin(), err.end(), 0L);
    out.events = trials;
    out.estimate = static_cast<double>(k) / static_cast<double>(trials);
    out.std_error = binom_se(out.estimate, trials);
    out.breakdown.emplace_back(
        "mean_claimed_prefix",
        static_cast<double>(std::accumulate(claimed.begin(), claimed.end(), 0L)) /
            static_cast<double>(trials));
    out.breakdown.emplace_back(
        "mean_true_prefix",
        static_cast<double>(std::accumulate(truth.begin(), truth.end(), 0L)) /
            static_cast<double>(trials));
  } else {
    throw std::invalid_argument("coverage runs through coverage_sim");
  }

  out.low_precision = out.events < 100;
  return out;
}

SimResult coverage_sim(const SimConfig& config) {
  validate_config(config);
  long trials = config.trials;
  std::vector<std::uint8_t> covered(static_cast<std::size_t>(trials), 0);
  std::vector<std::uint8_t> unbounded(static_cast<std::size_t>(trials), 0);
  run_trials(trials, config.jobs, [&](long t) {
    Stream data(derive_seed(config.master_seed, static_cast<std::uint64_t>(t), Purpose::data));
    std::vector<double> x = draw_observation(config.spec, config.theta, data);
    TestOptions opts;
    opts.alpha = config.alpha;
    opts.randomized = config.randomized;
    opts.seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(t), Purpose::scratch);
    BoundOutcome bound =
        winner_gap_bound(config.spec, make_observation(x), TieMode::random, config.bound_method, opts);
    int w = bound.ordered.order[0];
    double rival = neg_inf;
    for (int i = 0; i < config.spec.n; ++i)
      if (i != w) rival = std::max(rival, config.theta[static_cast<std::size_t>(i)]);
    double gap = config.theta[static_cast<std::size_t>(w)] - rival;
    covered[static_cast<std::size_t>(t)] = bound.delta_lower <= gap;
    unbounded[static_cast<std::size_t>(t)] = std::isinf(bound.delta_lower) && bound.delta_lower < 0;
  });

  SimResult out;
  out.trials = trials;
  out.events = trials;
  long k = std::accumulate(covered.begin(), covered.end(), 0L);
  out.estimate = static_cast<double>(k) / static_cast<double>(trials);
  out.std_error = binom_se(out.estimate, trials);
  out.low_precision = out.events < 100;
  out.breakdown.emplace_back("noncoverage", 1.0 - out.estimate);
  out.breakdown.emplace_back(
      "unbounded_rate",
      static_cast<double>(std::accumulate(unbounded.begin(), unbounded.end(), 0L)) /
          static_cast<double>(trials));
  return out;
}

ExhaustiveOracle::ExhaustiveOracle(const FamilySpec& spec, const std::vector<double>& theta)
    : spec_(spec), theta_(theta) {
  validate_spec(spec);
  if (!spec.lattice())
    throw std::invalid_argument("exhaustive enumeration needs a lattice family");
  validate_theta(spec, theta);

  double log_size = 0.0;
  switch (spec.family) {
    case Family::multinomial:
      log_size = log_choose(spec.m + spec.n - 1, spec.n - 1);
      break;
    case Family::independent_binomial:
      log_size = spec.n * std::log(static_cast<double>(spec.m) + 1.0);
      break;
    case Family::bradley_terry:
      log_size = log_choose(spec.m + spec.n - 1, spec.n - 1);
      break;
    case Family::normal_variance:
      break;
  }
  constexpr double kLimit = 1e7;
  if (log_size > std::log(kLimit)) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "exhaustive enumeration would visit about %.3g outcomes; the limit is %.0f",
                  std::exp(log_size), kLimit);
    throw std::domain_error(msg);
  }

  double c = spec.tilt_factor();
  std::vector<double> x(static_cast<std::size_t>(spec.n), 0.0);
  std::vector<double> log_p;
  auto visit = [&] {
    double lg = carrier_log(spec, x);
    if (lg == neg_inf) return;
    double lp = lg;
    for (int i = 0; i < spec.n; ++i)
      lp += c * theta[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    outcomes_.push_back({x, lp});
    log_p.push_back(lp);
  };

  if (spec.family == Family::independent_binomial) {
    std::function<void(int)> rec = [&](int idx) {
      for (long v = 0; v <= spec.m; ++v) {
        x[static_cast<std::size_t>(idx)] = static_cast<double>(v);
        if (idx == spec.n - 1)
          visit();
        else
          rec(idx + 1);
      }
    };
    rec(0);
  } else {
    long cap = spec.family == Family::bradley_terry ? spec.n - 1 : spec.m;
    std::function<void(int, long)> rec = [&](int idx, long rem) {
      if (idx == spec.n - 1) {
        if (rem <= cap) {
          x[static_cast<std::size_t>(idx)] = static_cast<double>(rem);
          visit();
        }
        return;
      }
      for (long v = 0; v <= std::min(cap, rem); ++v) {
        x[static_cast<std::size_t>(idx)] = static_cast<double>(v);
        rec(idx + 1, rem - v);
      }
    };
    rec(0, spec.m);
  }

  if (outcomes_.empty()) throw std::domain_error("the outcome space is empty");
  double norm = log_sum_exp(log_p);
  for (std::size_t i = 0; i < outcomes_.size(); ++i)
    outcomes_[i].prob = std::exp(log_p[i] - norm);
  best_ = best_of(theta_);
}

void ExhaustiveOracle::for_each_order(
    const std::function<void(const Outcome&, const OrderedView&, double)>& fn) const {
  int n = spec_.n;
  for (const Outcome& oc : outcomes_) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (oc.x[static_cast<std::size_t>(a)] != oc.x[static_cast<std::size_t>(b)])
        return oc.x[static_cast<std::size_t>(a)] > oc.x[static_cast<std::size_t>(b)];
      return a < b;
    });

    std::vector<std::pair<int, int>> runs;  // [begin, end) ranges of tied ranks
    double n_orders = 1.0;
    for (int r = 0; r < n;) {
      int e = r + 1;
      while (e < n && oc.x[static_cast<std::size_t>(order[static_cast<std::size_t>(e)])] ==
                          oc.x[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])])
        ++e;
      if (e - r >= 2) {
        runs.emplace_back(r, e);
        for (int i = 2; i <= e - r; ++i) n_orders *= i;
      }
      r = e;
    }

    OrderedView view;
    view.randomized = !runs.empty();
    for (const auto& [b, e] : runs) {
      std::vector<int> group(order.begin() + b, order.begin() + e);
      std::sort(group.begin(), group.end());
      view.tie_groups.push_back(std::move(group));
    }
    double weight = 1.0 / n_orders;

    std::function<void(std::size_t)> rec = [&](std::size_t ri) {
      if (ri == runs.size()) {
        view.order = order;
        view.rank_of.assign(static_cast<std::size_t>(n), 0);
        for (int r = 0; r < n; ++r) view.rank_of[order[static_cast<std::size_t>(r)]] = r;
        fn(oc, view, weight);
        return;
      }
      auto [b, e] = runs[ri];
      std::sort(order.begin() + b, order.begin() + e);
      do {
        rec(ri + 1);
      } while (std::next_permutation(order.begin() + b, order.begin() + e));
    };
    rec(0);
  }
}

double ExhaustiveOracle::winner_prob(int population) const {
  double total = 0.0;
  for_each_order([&](const Outcome& oc, const OrderedView& view, double w) {
    if (view.order[0] == population) total += oc.prob * w;
  });
  return total;
}

double ExhaustiveOracle::best_win_rate() const { return winner_prob(best_); }

namespace {

// U-measure of {all challenger p-values <= level} for the winner test at this
// outcome and recorded order; the per-pair p is affine in the one shared U
double rejection_measure(const FamilySpec& spec, const std::vector<double>& x,
                         const OrderedView& view, double level, bool randomized) {
  double thr = 1.0;
  for (int r = 1; r < spec.n; ++r) {
    int j = view.order[0], k = view.order[r];
    ConditionalLaw law = build_law(spec, x, j, k, 0.0, selection_truncation(x, view, 0, r));
    double d = (x[static_cast<std::size_t>(j)] - x[static_cast<std::size_t>(k)]) / 2.0;
    double incl = survival(law, d);
    if (!randomized) {
      if (incl > level) return 0.0;
      continue;
    }
    double atom = atom_mass(law, d);
    double excl = incl - atom;
    double t = atom > 0.0 ? (level - excl) / atom : (excl <= level ? 1.0 : 0.0);
    thr = std::min(thr, clamp01(t));
    if (thr == 0.0) return 0.0;
  }
  return randomized ? thr : 1.0;
}

}  // namespace

double ExhaustiveOracle::conditional_type1(double alpha, bool adjusted, bool randomized) const {
  double level = adjusted ? std::min(1.0, alpha * spec_.n / (spec_.n - 1.0)) : alpha;
  double num = 0.0, den = 0.0;
  for_each_order([&](const Outcome& oc, const OrderedView& view, double w) {
    if (view.order[0] == best_) return;
    double mass = oc.prob * w;
    den += mass;
    num += mass * rejection_measure(spec_, oc.x, view, level, randomized);
  });
  return den > 0.0 ? num / den : std::nan("");
}

double ExhaustiveOracle::marginal_error(double alpha, bool adjusted, bool randomized) const {
  double level = adjusted ? std::min(1.0, alpha * spec_.n / (spec_.n - 1.0)) : alpha;
  double total = 0.0;
  for_each_order([&](const Outcome& oc, const OrderedView& view, double w) {
    if (view.order[0] == best_) return;
    total += oc.prob * w * rejection_measure(spec_, oc.x, view, level, randomized);
  });
  return total;
}

double ExhaustiveOracle::worst_runner_up_gap(const std::vector<double>& tilts) const {
  double worst = neg_inf;
  for_each_order([&](const Outcome& oc, const OrderedView& view, double) {
    for (double delta : tilts) {
      double p_runner = selective_p(spec_, oc.x, view, 0, 1, delta);
      for (int r = 2; r < spec_.n; ++r)
        worst = std::max(worst, selective_p(spec_, oc.x, view, 0, r, delta) - p_runner);
    }
  });
  return worst;
}

double ExhaustiveOracle::noncoverage_exact(double alpha, BoundMethod method) const {
  double total = 0.0;
  for_each_order([&](const Outcome& oc, const OrderedView& view, double w) {
    int wI = view.order[0], rI = view.order[1];
    double rival = neg_inf;
    for (int i = 0; i < spec_.n; ++i)
      if (i != wI) rival = std::max(rival, theta_[static_cast<std::size_t>(i)]);
    double gap = theta_[static_cast<std::size_t>(wI)] - rival;
    double d = (oc.x[static_cast<std::size_t>(wI)] - oc.x[static_cast<std::size_t>(rI)]) / 2.0;

    double target, tilt;
    ConditionalLaw law;
    if (method == BoundMethod::unadjusted) {
      // the reported bound is floored at -inf below zero, so the miss event
      // {bound > gap} is {root > max(gap, 0)}
      target = alpha / 2.0;
      tilt = std::max(gap, 0.0);
      law = build_law(spec_, oc.x, wI, rI, tilt, Truncation{});
    } else {
      target = alpha;
      tilt = gap;
      law = build_law(spec_, oc.x, wI, rI, tilt, selection_truncation(oc.x, view, 0, 1));
    }
    double excl = survival(law, d) - atom_mass(law, d);
    double atom = atom_mass(law, d);
    double miss = atom > 0.0 ? clamp01((target - excl) / atom) : (excl <= target ? 1.0 : 0.0);
    total += oc.prob * w * miss;
  });
  return total;
}

}  // namespace rankverify

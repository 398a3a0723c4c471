#include "rankverify/families.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>

#include "rankverify/logspace.hpp"
#include "rankverify/rng.hpp"

namespace rankverify {

namespace {

constexpr double int_tol = 1e-9;

bool is_integral(double x) { return std::fabs(x - std::round(x)) <= int_tol; }

long as_long(double x) { return static_cast<long>(std::llround(x)); }

// Tournament counts by full enumeration of the 2^C(n,2) match outcomes, one
// table per n, built once behind a lock.
const std::map<std::vector<int>, double>& tournament_table(int n) {
  static std::mutex mu;
  static std::map<int, std::map<std::vector<int>, double>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  int pairs = n * (n - 1) / 2;
  std::map<std::vector<int>, double> counts;
  std::vector<int> score(n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << pairs); ++mask) {
    std::fill(score.begin(), score.end(), 0);
    int b = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++b) {
        if ((mask >> b) & 1)
          ++score[i];
        else
          ++score[j];
      }
    counts[score] += 1.0;
  }
  return cache.emplace(n, std::move(counts)).first->second;
}

}  // namespace

std::string FamilySpec::family_name() const {
  switch (family) {
    case Family::multinomial: return "multinomial";
    case Family::independent_binomial: return "independent_binomial";
    case Family::normal_variance: return "normal_variance";
    case Family::bradley_terry: return "bradley_terry";
  }
  return "unknown";
}

FamilySpec multinomial_spec(int n, long m) {
  FamilySpec s{Family::multinomial, n, m};
  validate_spec(s);
  return s;
}

FamilySpec independent_binomial_spec(int n, long m) {
  FamilySpec s{Family::independent_binomial, n, m};
  validate_spec(s);
  return s;
}

FamilySpec normal_variance_spec(int n, long m) {
  FamilySpec s{Family::normal_variance, n, m};
  validate_spec(s);
  return s;
}

FamilySpec bradley_terry_spec(int n) {
  FamilySpec s{Family::bradley_terry, n, static_cast<long>(n) * (n - 1) / 2};
  validate_spec(s);
  return s;
}

void validate_spec(const FamilySpec& spec) {
  if (spec.n < 2) throw std::invalid_argument("family spec: need at least 2 populations");
  switch (spec.family) {
    case Family::multinomial:
    case Family::independent_binomial:
      if (spec.m < 1) throw std::invalid_argument("family spec: m must be positive");
      break;
    case Family::normal_variance:
      if (spec.m < 2)
        throw std::invalid_argument("family spec: need at least 2 observations per group");
      break;
    case Family::bradley_terry:
      if (spec.n > 6)
        throw std::invalid_argument(
            "family spec: round-robin carrier enumeration supports at most 6 players");
      if (spec.m != static_cast<long>(spec.n) * (spec.n - 1) / 2)
        throw std::invalid_argument("family spec: round-robin total must be n(n-1)/2 games");
      break;
  }
}

void validate(const FamilySpec& spec, const std::vector<double>& x) {
  validate_spec(spec);
  if (static_cast<int>(x.size()) != spec.n)
    throw std::invalid_argument("observation: expected " + std::to_string(spec.n) +
                                " values, got " + std::to_string(x.size()));
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("observation: values must be finite");

  switch (spec.family) {
    case Family::multinomial: {
      double sum = 0.0;
      for (double v : x) {
        if (!is_integral(v) || v < -int_tol)
          throw std::invalid_argument("observation: counts must be nonnegative integers");
        sum += v;
      }
      if (!is_integral(sum) || as_long(sum) != spec.m)
        throw std::invalid_argument("observation: counts must sum to m = " +
                                    std::to_string(spec.m));
      break;
    }
    case Family::independent_binomial:
      for (double v : x)
        if (!is_integral(v) || v < -int_tol || v > double(spec.m) + int_tol)
          throw std::invalid_argument("observation: counts must be integers in [0, m]");
      break;
    case Family::normal_variance:
      for (double v : x)
        if (!(v > 0.0))
          throw std::invalid_argument("observation: variance statistics must be positive");
      break;
    case Family::bradley_terry: {
      double sum = 0.0;
      for (double v : x) {
        if (!is_integral(v) || v < -int_tol || v > double(spec.n - 1) + int_tol)
          throw std::invalid_argument("observation: win totals must be integers in [0, n-1]");
        sum += v;
      }
      if (as_long(sum) != spec.m)
        throw std::invalid_argument("observation: win totals must sum to n(n-1)/2");
      if (carrier_log(spec, x) == neg_inf)
        throw std::invalid_argument("observation: win totals form no legal round-robin outcome");
      break;
    }
  }
}

double carrier_log(const FamilySpec& spec, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != spec.n) return neg_inf;
  switch (spec.family) {
    case Family::multinomial: {
      double sum = 0.0, lg = 0.0;
      for (double v : x) {
        if (!is_integral(v) || v < -int_tol) return neg_inf;
        sum += v;
        lg -= std::lgamma(v + 1.0);
      }
      if (!is_integral(sum) || as_long(sum) != spec.m) return neg_inf;
      return lg;
    }
    case Family::independent_binomial: {
      double lg = 0.0;
      for (double v : x) {
        if (!is_integral(v)) return neg_inf;
        long vi = as_long(v);
        if (vi < 0 || vi > spec.m) return neg_inf;
        lg += log_choose(spec.m, vi);
      }
      return lg;
    }
    case Family::normal_variance: {
      double c = (double(spec.m) - 3.0) / 2.0;
      double lg = 0.0;
      for (double v : x) {
        if (!(v > 0.0)) return neg_inf;
        lg += c * std::log(v);
      }
      return lg;
    }
    case Family::bradley_terry: {
      std::vector<int> score(spec.n);
      long sum = 0;
      for (int i = 0; i < spec.n; ++i) {
        if (!is_integral(x[i]) || x[i] < -int_tol) return neg_inf;
        score[i] = static_cast<int>(as_long(x[i]));
        sum += score[i];
      }
      if (sum != spec.m) return neg_inf;
      const auto& table = tournament_table(spec.n);
      auto it = table.find(score);
      if (it == table.end()) return neg_inf;
      return std::log(it->second);
    }
  }
  return neg_inf;
}

Observation make_observation(std::vector<double> values, std::vector<std::string> labels) {
  Observation obs;
  obs.values = std::move(values);
  if (labels.empty()) {
    for (std::size_t i = 0; i < obs.values.size(); ++i)
      labels.push_back("pop" + std::to_string(i + 1));
  }
  if (labels.size() != obs.values.size())
    throw std::invalid_argument("observation: label count must match value count");
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = i + 1; j < labels.size(); ++j)
      if (labels[i] == labels[j])
        throw std::invalid_argument("observation: duplicate label '" + labels[i] + "'");
  obs.labels = std::move(labels);
  return obs;
}

OrderedView order_observation(const FamilySpec& spec, const std::vector<double>& x, TieMode mode,
                              std::optional<std::uint64_t> seed) {
  if (static_cast<int>(x.size()) != spec.n)
    throw std::invalid_argument("order_observation: wrong number of values");
  if (mode == TieMode::random && !seed)
    throw std::invalid_argument("order_observation: random tie-breaking requires an explicit seed");

  OrderedView view;
  view.order.resize(x.size());
  std::iota(view.order.begin(), view.order.end(), 0);
  std::stable_sort(view.order.begin(), view.order.end(), [&](int a, int b) {
    if (x[a] != x[b]) return x[a] > x[b];
    return a < b;
  });

  // maximal runs of equal values, in rank order
  std::size_t i = 0;
  bool any_tie = false;
  while (i < view.order.size()) {
    std::size_t j = i + 1;
    while (j < view.order.size() && x[view.order[j]] == x[view.order[i]]) ++j;
    if (j - i >= 2) {
      any_tie = true;
      std::vector<int> group(view.order.begin() + i, view.order.begin() + j);
      std::sort(group.begin(), group.end());
      view.tie_groups.push_back(std::move(group));
    }
    i = j;
  }

  if (mode == TieMode::random && any_tie) {
    Stream stream(*seed);
    std::size_t a = 0;
    while (a < view.order.size()) {
      std::size_t b = a + 1;
      while (b < view.order.size() && x[view.order[b]] == x[view.order[a]]) ++b;
      if (b - a >= 2) stream.shuffle(view.order.begin() + a, view.order.begin() + b);
      a = b;
    }
    view.randomized = true;
  }

  view.rank_of.assign(x.size(), 0);
  for (std::size_t r = 0; r < view.order.size(); ++r) view.rank_of[view.order[r]] = int(r);
  return view;
}

DeltaScale interpret_delta(const FamilySpec& spec, double delta) {
  DeltaScale out;
  out.value = std::exp(spec.tilt_factor() * delta);
  switch (spec.family) {
    case Family::multinomial:
      out.label = "cell probability ratio";
      break;
    case Family::independent_binomial:
      out.label = "per-trial odds ratio";
      break;
    case Family::normal_variance:
      out.label = "exp natural-parameter gap (inverse-variance scale)";
      break;
    case Family::bradley_terry:
      out.label = "head-to-head odds";
      break;
  }
  return out;
}

}  // namespace rankverify

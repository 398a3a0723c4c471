#include "rankverify/majorization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>

#include "rankverify/logspace.hpp"
#include "rankverify/rng.hpp"

namespace rankverify {

namespace {

bool all_integral(const std::vector<double>& v) {
  for (double x : v)
    if (std::fabs(x - std::round(x)) > 1e-9) return false;
  return true;
}

std::string vec_str(const std::vector<double>& v) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << ")";
  return os.str();
}

}  // namespace

MajorizationVerdict majorizes(const std::vector<double>& a, const std::vector<double>& b,
                              double tol) {
  if (a.size() != b.size() || a.empty()) return {MajDirection::incomparable};

  std::vector<double> sa = a, sb = b;
  std::sort(sa.begin(), sa.end(), std::greater<>());
  std::sort(sb.begin(), sb.end(), std::greater<>());

  if (all_integral(a) && all_integral(b)) {
    // exact integer prefix sums
    std::int64_t pa = 0, pb = 0;
    bool a_ge = true, b_ge = true, equal = true;
    for (std::size_t i = 0; i < sa.size(); ++i) {
      pa += std::llround(sa[i]);
      pb += std::llround(sb[i]);
      if (pa < pb) a_ge = false;
      if (pb < pa) b_ge = false;
      if (pa != pb) equal = false;
    }
    if (pa != pb) return {MajDirection::incomparable};  // unequal totals
    if (equal) return {MajDirection::equal_up_to_permutation};
    if (a_ge) return {MajDirection::first_over_second};
    if (b_ge) return {MajDirection::second_over_first};
    return {MajDirection::incomparable};
  }

  double pa = 0.0, pb = 0.0;
  bool a_ge = true, b_ge = true, equal = true;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    pa += sa[i];
    pb += sb[i];
    if (pa < pb - tol) a_ge = false;
    if (pb < pa - tol) b_ge = false;
    if (std::fabs(pa - pb) > tol) equal = false;
  }
  if (std::fabs(pa - pb) > tol) return {MajDirection::incomparable};
  if (equal) return {MajDirection::equal_up_to_permutation};
  if (a_ge) return {MajDirection::first_over_second};
  if (b_ge) return {MajDirection::second_over_first};
  return {MajDirection::incomparable};
}

std::vector<double> transfer(const std::vector<double>& x, int from, int to, double amount) {
  if (from < 0 || to < 0 || from >= static_cast<int>(x.size()) ||
      to >= static_cast<int>(x.size()) || from == to)
    throw std::invalid_argument("transfer: bad coordinate indices");
  if (amount < 0.0) throw std::invalid_argument("transfer: amount must be nonnegative");
  if (x[from] < x[to] + 2.0 * amount - 1e-12)
    throw std::invalid_argument("transfer: would overshoot past evenness");
  std::vector<double> y = x;
  y[from] -= amount;
  y[to] += amount;
  return y;
}

SchurCheckReport check_schur_concave(
    const std::function<double(const std::vector<double>&)>& log_f,
    const std::vector<std::vector<double>>& points, double tol) {
  SchurCheckReport report;
  for (const auto& x : points) {
    double fx = log_f(x);
    if (fx == neg_inf) continue;  // off support, nothing to compare
    int n = static_cast<int>(x.size());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j || !(x[i] > x[j])) continue;
        bool integral = std::fabs(x[i] - std::round(x[i])) <= 1e-9 &&
                        std::fabs(x[j] - std::round(x[j])) <= 1e-9;
        double gap = x[i] - x[j];
        double amount = integral ? (gap >= 2.0 ? 1.0 : 0.0) : gap / 4.0;
        if (amount <= 0.0) continue;
        std::vector<double> y = transfer(x, i, j, amount);
        double fy = log_f(y);
        ++report.probes;
        // y is strictly more even than x, so log f may not drop
        if (fy < fx - tol) {
          report.passed = false;
          if (report.first_violation.empty()) {
            std::ostringstream os;
            os << "log f" << vec_str(y) << " = " << fy << " < log f" << vec_str(x) << " = " << fx;
            report.first_violation = os.str();
          }
        }
      }
    }
  }
  return report;
}

SchurCheckReport check_schur_concave(const FamilySpec& spec, long max_probes, std::uint64_t seed,
                                     double tol) {
  validate_spec(spec);
  std::vector<std::vector<double>> points;
  Stream stream(seed);

  switch (spec.family) {
    case Family::multinomial: {
      // enumerate compositions when small, otherwise sample
      long m = spec.m;
      int n = spec.n;
      std::vector<double> x(n, 0.0);
      std::function<void(int, long)> rec = [&](int pos, long left) {
        if (static_cast<long>(points.size()) >= max_probes) return;
        if (pos == n - 1) {
          x[pos] = double(left);
          points.push_back(x);
          return;
        }
        for (long v = 0; v <= left; ++v) {
          x[pos] = double(v);
          rec(pos + 1, left - v);
        }
      };
      rec(0, m);
      if (static_cast<long>(points.size()) >= max_probes) {
        points.clear();
        std::vector<double> probs(n, 1.0 / n);
        for (long t = 0; t < max_probes; ++t) {
          auto counts = stream.multinomial(m, probs);
          points.emplace_back(counts.begin(), counts.end());
        }
      }
      break;
    }
    case Family::independent_binomial: {
      for (long t = 0; t < max_probes; ++t) {
        std::vector<double> x(spec.n);
        for (int i = 0; i < spec.n; ++i) x[i] = double(stream.bounded(spec.m + 1));
        points.push_back(std::move(x));
      }
      break;
    }
    case Family::normal_variance: {
      for (long t = 0; t < max_probes; ++t) {
        std::vector<double> x(spec.n);
        for (int i = 0; i < spec.n; ++i) x[i] = std::exp(stream.normal());
        points.push_back(std::move(x));
      }
      break;
    }
    case Family::bradley_terry: {
      // walk the whole lattice of totals; the carrier prunes off-support rows
      int n = spec.n;
      std::vector<double> x(n, 0.0);
      std::function<void(int, long)> rec = [&](int pos, long left) {
        if (pos == n - 1) {
          if (left <= n - 1) {
            x[pos] = double(left);
            points.push_back(x);
          }
          return;
        }
        for (long v = 0; v <= std::min<long>(n - 1, left); ++v) {
          x[pos] = double(v);
          rec(pos + 1, left - v);
        }
      };
      rec(0, spec.m);
      break;
    }
  }

  return check_schur_concave([&](const std::vector<double>& x) { return carrier_log(spec, x); },
                             points, tol);
}

}  // namespace rankverify

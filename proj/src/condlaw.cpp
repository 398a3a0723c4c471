#include "rankverify/condlaw.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace rankverify {

namespace {

constexpr double d_tol = 1e-9;  // lattice points live on a half-integer grid

bool is_integral(double x) { return std::fabs(x - std::round(x)) <= 1e-9; }

double pair_log_weight_closed(const FamilySpec& spec, const std::vector<double>& x, int j, int k,
                              long v, long s) {
  switch (spec.family) {
    case Family::multinomial:
      return log_choose(s, v);
    case Family::independent_binomial:
      return log_choose(spec.m, v) + log_choose(spec.m, s - v);
    case Family::bradley_terry: {
      // no simpler closed form than the carrier itself
      std::vector<double> y = x;
      y[j] = double(v);
      y[k] = double(s - v);
      return carrier_log(spec, y);
    }
    case Family::normal_variance:
      break;
  }
  throw std::logic_error("pair_log_weight_closed: continuous family");
}

double pair_log_weight_generic(const FamilySpec& spec, const std::vector<double>& x, int j, int k,
                               long v, long s) {
  std::vector<double> y = x;
  y[j] = double(v);
  y[k] = double(s - v);
  return carrier_log(spec, y);
}

// adaptive Simpson with Richardson correction
double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                   double fm, double fb, double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

// log of the integral of B^{a-1}(1-B)^{a-1} exp(kappa B) over [b1, b2],
// via B = sin^2(psi): the transformed integrand 2(sin psi cos psi)^{2a-1}
// exp(kappa sin^2 psi) stays bounded for every a >= 1/2
double log_tilted_beta_mass(double a, double kappa, double b1, double b2) {
  if (!(b2 > b1)) return neg_inf;
  b1 = std::clamp(b1, 0.0, 1.0);
  b2 = std::clamp(b2, 0.0, 1.0);
  double p1 = std::asin(std::sqrt(b1));
  double p2 = std::asin(std::sqrt(b2));
  double shift = kappa > 0 ? kappa * b2 : kappa * b1;
  double e = 2.0 * a - 1.0;
  auto h = [&](double psi) {
    double sn = std::sin(psi), cs = std::cos(psi);
    double base = sn * cs;
    double powed = e == 0.0 ? 1.0 : std::pow(base, e);
    return 2.0 * powed * std::exp(kappa * sn * sn - shift);
  };
  double val = adaptive_simpson(h, p1, p2, 1e-13);
  if (!(val > 0.0)) return neg_inf;
  return std::log(val) + shift;
}

void halve_boundary_atoms(ConditionalLaw& law) {
  constexpr double log_half = -0.6931471805599453;
  for (std::size_t i = 0; i < law.d.size(); ++i) {
    if (std::isfinite(law.trunc.lower) && std::fabs(law.d[i] - law.trunc.lower) <= d_tol)
      law.log_w[i] += log_half;
    if (std::isfinite(law.trunc.upper) && std::fabs(law.d[i] - law.trunc.upper) <= d_tol)
      law.log_w[i] += log_half;
  }
}

ConditionalLaw build_law_impl(const FamilySpec& spec, const std::vector<double>& x, int j, int k,
                              double delta, const Truncation& trunc, bool generic) {
  validate_spec(spec);
  if (static_cast<int>(x.size()) != spec.n)
    throw std::invalid_argument("conditional law: wrong number of values");
  if (j < 0 || k < 0 || j >= spec.n || k >= spec.n || j == k)
    throw std::invalid_argument("conditional law: bad pair indices");
  if (!std::isfinite(delta)) throw std::invalid_argument("conditional law: tilt must be finite");
  if (std::isnan(trunc.lower) || std::isnan(trunc.upper) || trunc.lower > trunc.upper + d_tol)
    throw std::domain_error("conditional law: empty truncation window");

  ConditionalLaw law;
  law.spec = spec;
  law.j = j;
  law.k = k;
  law.delta = delta;
  law.trunc = trunc;
  law.s = x[j] + x[k];
  double c = spec.tilt_factor();

  if (spec.family == Family::normal_variance) {
    if (!(x[j] > 0.0) || !(x[k] > 0.0))
      throw std::invalid_argument("conditional law: variance statistics must be positive");
    law.continuous = true;
    law.beta_shape = (double(spec.m) - 1.0) / 2.0;
    law.kappa = delta * law.s;  // tilt on the fraction B = X_j / s
    law.force_quadrature = generic;
    law.b_lo = std::max(0.0, 0.5 + trunc.lower / law.s);
    law.b_hi = std::min(1.0, 0.5 + trunc.upper / law.s);
    if (!(law.b_hi > law.b_lo + 1e-14))
      throw std::domain_error("conditional law: truncation window misses the support");
    return law;
  }

  if (!is_integral(x[j]) || !is_integral(x[k]))
    throw std::invalid_argument("conditional law: lattice family needs integer counts");
  long s = std::llround(law.s);
  if (s < 0) throw std::invalid_argument("conditional law: negative pair sum");

  long v_lo = 0, v_hi = s;
  if (spec.family == Family::independent_binomial) {
    v_lo = std::max<long>(0, s - spec.m);
    v_hi = std::min<long>(spec.m, s);
  } else if (spec.family == Family::bradley_terry) {
    v_lo = std::max<long>(0, s - (spec.n - 1));
    v_hi = std::min<long>(spec.n - 1, s);
  }
  if (v_lo > v_hi) throw std::domain_error("conditional law: pair sum outside the family support");

  double half = double(s) / 2.0;
  for (long v = v_lo; v <= v_hi; ++v) {
    double dv = double(v) - half;
    if (dv < trunc.lower - d_tol || dv > trunc.upper + d_tol) continue;
    double lw = generic ? pair_log_weight_generic(spec, x, j, k, v, s)
                        : pair_log_weight_closed(spec, x, j, k, v, s);
    if (lw == neg_inf) continue;
    law.d.push_back(dv);
    law.log_w.push_back(lw + c * delta * dv);
  }
  if (law.d.empty())
    throw std::domain_error("conditional law: no support inside the truncation window");

  halve_boundary_atoms(law);
  double z = log_sum_exp(law.log_w);
  for (double& lw : law.log_w) lw -= z;
  return law;
}

// P(Beta(a,a) in [lo, hi]) without near-one cancellation: fold the symmetric
// law onto whichever side keeps the incomplete-beta arguments below 1/2
double beta_sym_mass(double a, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  if (lo >= 0.5) return reg_inc_beta(a, a, 1.0 - lo) - reg_inc_beta(a, a, 1.0 - hi);
  if (hi <= 0.5) return reg_inc_beta(a, a, hi) - reg_inc_beta(a, a, lo);
  return beta_sym_mass(a, lo, 0.5) + beta_sym_mass(a, 0.5, hi);
}

double continuous_tail_ratio(const ConditionalLaw& law, double b) {
  // P(B >= b | B in [b_lo, b_hi])
  if (b <= law.b_lo) return 1.0;
  if (b >= law.b_hi) return 0.0;
  double a = law.beta_shape;
  if (law.kappa == 0.0 && !law.force_quadrature) {
    double top = beta_sym_mass(a, b, law.b_hi);
    double all = beta_sym_mass(a, law.b_lo, law.b_hi);
    return std::clamp(top / all, 0.0, 1.0);
  }
  double top = log_tilted_beta_mass(a, law.kappa, b, law.b_hi);
  double all = log_tilted_beta_mass(a, law.kappa, law.b_lo, law.b_hi);
  if (all == neg_inf) throw std::domain_error("conditional law: vanishing truncated mass");
  if (top == neg_inf) return 0.0;
  return std::clamp(std::exp(top - all), 0.0, 1.0);
}

}  // namespace

ConditionalLaw build_law(const FamilySpec& spec, const std::vector<double>& x, int j, int k,
                         double delta, const Truncation& trunc) {
  return build_law_impl(spec, x, j, k, delta, trunc, false);
}

ConditionalLaw build_law_generic(const FamilySpec& spec, const std::vector<double>& x, int j, int k,
                                 double delta, const Truncation& trunc) {
  return build_law_impl(spec, x, j, k, delta, trunc, true);
}

double atom_mass(const ConditionalLaw& law, double d) {
  if (law.continuous) return 0.0;
  for (std::size_t i = 0; i < law.d.size(); ++i)
    if (std::fabs(law.d[i] - d) <= d_tol) return std::exp(law.log_w[i]);
  return 0.0;
}

double survival(const ConditionalLaw& law, double d) {
  if (law.continuous) return continuous_tail_ratio(law, 0.5 + d / law.s);
  if (d <= law.d.front() + d_tol) return 1.0;  // whole support: exactly one
  double acc = 0.0;
  for (std::size_t i = 0; i < law.d.size(); ++i)
    if (law.d[i] >= d - d_tol) acc += std::exp(law.log_w[i]);
  return std::min(acc, 1.0);
}

double survival_randomized(const ConditionalLaw& law, double d, double u) {
  if (u < 0.0 || u > 1.0) throw std::invalid_argument("survival_randomized: u outside [0, 1]");
  if (law.continuous) return continuous_tail_ratio(law, 0.5 + d / law.s);
  return std::min(survival(law, d) - (1.0 - u) * atom_mass(law, d), 1.0);
}

double two_tailed_p(const ConditionalLaw& law, double d) {
  double up = survival(law, d);
  double down;
  if (law.continuous) {
    down = 1.0 - continuous_tail_ratio(law, 0.5 + d / law.s);
  } else {
    down = 0.0;
    for (std::size_t i = 0; i < law.d.size(); ++i)
      if (law.d[i] <= d + d_tol) down += std::exp(law.log_w[i]);
  }
  return std::min(1.0, 2.0 * std::min(up, down));
}

double two_tailed_p_randomized(const ConditionalLaw& law, double d, double u) {
  if (u < 0.0 || u > 1.0) throw std::invalid_argument("two_tailed_p_randomized: u outside [0, 1]");
  double w = atom_mass(law, d);
  double up = survival(law, d) - (1.0 - u) * w;
  double down = (1.0 - survival(law, d)) + (1.0 - u) * w;
  return std::min(1.0, 2.0 * std::min(up, down));
}

double quantile(const ConditionalLaw& law, double q) {
  if (!(q >= 0.0) || !(q <= 1.0)) throw std::invalid_argument("quantile: q outside [0, 1]");
  if (law.continuous) {
    double lo = law.b_lo, hi = law.b_hi;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      double cdf = 1.0 - continuous_tail_ratio(law, mid);
      if (cdf >= q)
        hi = mid;
      else
        lo = mid;
      if (hi - lo < 1e-13) break;
    }
    return law.s * (hi - 0.5);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < law.d.size(); ++i) {
    acc += std::exp(law.log_w[i]);
    if (acc >= q - 1e-12) return law.d[i];
  }
  return law.d.back();
}

}  // namespace rankverify

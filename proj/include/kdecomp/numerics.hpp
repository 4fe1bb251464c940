#pragma once

// Special functions, bracketed root finding and adaptive quadrature.
//
// Everything here is a pure function of its arguments and templated on the
// floating-point type, in the same spirit as Eigen's scalar-generic free
// functions.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "kdecomp/errors.hpp"

namespace kdecomp {

struct Tolerance {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_iter = 200;

  void validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || max_iter < 1) {
      throw ValidationError("tolerance requires abs_tol > 0, rel_tol > 0, max_iter >= 1");
    }
  }
};

template <std::floating_point Scalar>
Scalar std_normal_pdf(Scalar x) {
  return std::exp(Scalar(-0.5) * x * x) / std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
}

template <std::floating_point Scalar>
Scalar std_normal_cdf(Scalar x) {
  if (!std::isfinite(x)) throw DomainError("std_normal_cdf: argument must be finite");
  return Scalar(0.5) * std::erfc(-x / std::numbers::sqrt2_v<Scalar>);
}

namespace detail {

constexpr int kGammaMaxIter = 100000;

// exp(-x + a ln x - ln Gamma(a)), the common prefactor of P and Q.
template <std::floating_point Scalar>
Scalar gamma_prefactor(Scalar a, Scalar x) {
  return std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Series for P(a, x); converges fast for x < a + 1.
template <std::floating_point Scalar>
Scalar lower_gamma_series(Scalar a, Scalar x) {
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  Scalar ap = a;
  Scalar term = Scalar(1) / a;
  Scalar sum = term;
  for (int n = 0; n < kGammaMaxIter; ++n) {
    ap += Scalar(1);
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * eps) return sum * gamma_prefactor(a, x);
  }
  throw ConvergenceError("incomplete gamma series did not converge");
}

// Modified Lentz continued fraction for Q(a, x); used for x >= a + 1.
template <std::floating_point Scalar>
Scalar upper_gamma_fraction(Scalar a, Scalar x) {
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  const Scalar tiny = std::numeric_limits<Scalar>::min() / eps;
  Scalar b = x + Scalar(1) - a;
  Scalar c = Scalar(1) / tiny;
  Scalar d = Scalar(1) / b;
  Scalar h = d;
  for (int i = 1; i < kGammaMaxIter; ++i) {
    const Scalar an = -Scalar(i) * (Scalar(i) - a);
    b += Scalar(2);
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = Scalar(1) / d;
    const Scalar delta = d * c;
    h *= delta;
    if (std::abs(delta - Scalar(1)) < eps) return gamma_prefactor(a, x) * h;
  }
  throw ConvergenceError("incomplete gamma continued fraction did not converge");
}

template <std::floating_point Scalar>
void check_gamma_args(Scalar a, Scalar x) {
  if (!(a > 0) || !std::isfinite(a)) throw DomainError("incomplete gamma: a must be positive and finite");
  if (!(x >= 0) || std::isnan(x)) throw DomainError("incomplete gamma: x must be nonnegative");
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a, x).
template <std::floating_point Scalar>
Scalar regularized_lower_gamma(Scalar a, Scalar x) {
  detail::check_gamma_args(a, x);
  if (x == 0) return Scalar(0);
  if (std::isinf(x)) return Scalar(1);
  if (x < a + Scalar(1)) return std::clamp(detail::lower_gamma_series(a, x), Scalar(0), Scalar(1));
  return std::clamp(Scalar(1) - detail::upper_gamma_fraction(a, x), Scalar(0), Scalar(1));
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed without
/// cancellation in the far tail.
template <std::floating_point Scalar>
Scalar regularized_upper_gamma(Scalar a, Scalar x) {
  detail::check_gamma_args(a, x);
  if (x == 0) return Scalar(1);
  if (std::isinf(x)) return Scalar(0);
  if (x < a + Scalar(1)) return std::clamp(Scalar(1) - detail::lower_gamma_series(a, x), Scalar(0), Scalar(1));
  return std::clamp(detail::upper_gamma_fraction(a, x), Scalar(0), Scalar(1));
}

template <std::floating_point Scalar>
Scalar chi_square_cdf(Scalar statistic, Scalar dof) {
  return regularized_lower_gamma(dof / Scalar(2), statistic / Scalar(2));
}

template <std::floating_point Scalar>
Scalar chi_square_survival(Scalar statistic, Scalar dof) {
  return regularized_upper_gamma(dof / Scalar(2), statistic / Scalar(2));
}

/// Bracketed root finder for a function with a sign change on [lo, hi].
///
/// Bisection, optionally interleaved with secant steps: a secant step is only
/// taken after a step that at least halved the bracket, so the worst case is
/// twice the bisection iteration count.
///
/// Stops when |f(x)| <= abs_tol or the bracket is narrower than
/// rel_tol * |x| + abs_tol; in the latter case the endpoint with the smaller
/// residual is returned.
template <std::floating_point Scalar, class F>
Scalar find_root(F&& f, Scalar lo, Scalar hi, const Tolerance& tol = {}, bool accelerate = true) {
  tol.validate();
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw DomainError("find_root: bracket must be finite");
  if (lo > hi) std::swap(lo, hi);

  Scalar flo = f(lo);
  Scalar fhi = f(hi);
  if (std::isnan(flo) || std::isnan(fhi)) throw DomainError("find_root: function is NaN at bracket end");
  if (flo == 0) return lo;
  if (fhi == 0) return hi;
  if ((flo < 0) == (fhi < 0)) {
    throw BracketError("find_root: no sign change on [" + std::to_string(static_cast<double>(lo)) + ", " +
                       std::to_string(static_cast<double>(hi)) + "]");
  }

  auto best = [&] { return std::abs(flo) <= std::abs(fhi) ? lo : hi; };
  bool last_halved = true;
  for (int iter = 0; iter < tol.max_iter; ++iter) {
    const Scalar width = hi - lo;
    const Scalar mid = lo + width / Scalar(2);
    Scalar x = mid;
    if (accelerate && last_halved) {
      const Scalar secant = hi - fhi * (hi - lo) / (fhi - flo);
      if (secant > lo && secant < hi && std::isfinite(secant)) x = secant;
    }
    if (!(x > lo && x < hi)) return best();  // bracket is two adjacent floats

    const Scalar fx = f(x);
    if (std::isnan(fx)) throw DomainError("find_root: function is NaN inside bracket");
    if (std::abs(fx) <= Scalar(tol.abs_tol)) return x;

    if ((fx < 0) == (flo < 0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
    last_halved = (hi - lo) <= width / Scalar(2);
    if (hi - lo <= Scalar(tol.rel_tol) * std::abs(x) + Scalar(tol.abs_tol)) return best();
  }
  throw ConvergenceError("find_root: exceeded " + std::to_string(tol.max_iter) + " iterations");
}

namespace detail {

constexpr int kSimpsonMaxDepth = 60;
constexpr int kSimpsonInitialPanels = 8;

// The local tolerance halves with each level but stops at 2^-20 of the panel
// tolerance, so endpoint singularities such as sqrt(x) resolve within the
// depth limit.
constexpr int kSimpsonEpsHalvings = 20;

template <std::floating_point Scalar, class F>
Scalar adaptive_simpson(F& f, Scalar a, Scalar b, Scalar fa, Scalar fm, Scalar fb, Scalar whole, Scalar eps,
                        Scalar eps_floor, int depth) {
  const Scalar m = a + (b - a) / Scalar(2);
  const Scalar lm = a + (m - a) / Scalar(2);
  const Scalar rm = m + (b - m) / Scalar(2);
  const Scalar flm = f(lm);
  const Scalar frm = f(rm);
  if (!std::isfinite(flm) || !std::isfinite(frm)) throw DomainError("integrate: integrand is not finite");
  const Scalar left = (m - a) / Scalar(6) * (fa + Scalar(4) * flm + fm);
  const Scalar right = (b - m) / Scalar(6) * (fm + Scalar(4) * frm + fb);
  const Scalar both = left + right;
  const Scalar diff = both - whole;
  const Scalar roundoff = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * (std::abs(left) + std::abs(right));
  if (std::abs(diff) <= Scalar(15) * eps || std::abs(diff) <= roundoff || !(lm > a && rm < b)) {
    return both + diff / Scalar(15);
  }
  if (depth >= kSimpsonMaxDepth) throw ConvergenceError("integrate: maximum subdivision depth exceeded");
  const Scalar child_eps = std::max(eps / Scalar(2), eps_floor);
  return adaptive_simpson(f, a, m, fa, flm, fm, left, child_eps, eps_floor, depth + 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, child_eps, eps_floor, depth + 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [lo, hi] to absolute tolerance
/// tol.abs_tol. The interval is first cut into a few equal panels so that a
/// narrow peak is not missed by the initial five-point sample.
template <std::floating_point Scalar, class F>
Scalar integrate(F&& f, Scalar lo, Scalar hi, const Tolerance& tol = {}) {
  tol.validate();
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw DomainError("integrate: limits must be finite");
  if (lo > hi) throw DomainError("integrate: requires lo <= hi");
  if (lo == hi) return Scalar(0);

  const int panels = detail::kSimpsonInitialPanels;
  const Scalar step = (hi - lo) / Scalar(panels);
  const Scalar eps = Scalar(tol.abs_tol) / Scalar(panels);
  Scalar total = 0;
  Scalar a = lo;
  Scalar fa = f(a);
  for (int i = 0; i < panels; ++i) {
    const Scalar b = (i + 1 == panels) ? hi : lo + step * Scalar(i + 1);
    const Scalar m = a + (b - a) / Scalar(2);
    const Scalar fm = f(m);
    const Scalar fb = f(b);
    if (!std::isfinite(fa) || !std::isfinite(fm) || !std::isfinite(fb)) {
      throw DomainError("integrate: integrand is not finite");
    }
    const Scalar whole = (b - a) / Scalar(6) * (fa + Scalar(4) * fm + fb);
    total += detail::adaptive_simpson(f, a, b, fa, fm, fb, whole, eps,
                                      std::ldexp(eps, -detail::kSimpsonEpsHalvings), 0);
    a = b;
    fa = fb;
  }
  return total;
}

}  // namespace kdecomp

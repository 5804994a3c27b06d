#pragma once

// Gamma-law machinery for the maximum-diversity reference channel.
//
// The squared zero-delay tap of a time-reversal precoded channel with M
// independent antennas and N equal-power Rayleigh taps follows
// Gamma(shape = M*N, scale = 1/N). Everything here is a pure function of its
// arguments and templated on the floating-point scalar.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fmargin/errors.hpp"

namespace fmargin {

/// Probability strictly inside (0, 1).
template <typename Scalar>
class ProbabilityT {
 public:
  explicit ProbabilityT(Scalar value) : value_(value) {
    if (!(value > Scalar(0) && value < Scalar(1))) {
      throw DomainError("probability must lie in (0, 1), got " + std::to_string(value));
    }
  }
  Scalar value() const { return value_; }
  operator Scalar() const { return value_; }

 private:
  Scalar value_;
};

template <typename Scalar>
struct GammaParamsT {
  Scalar shape;
  Scalar scale;

  GammaParamsT(Scalar shape_, Scalar scale_) : shape(shape_), scale(scale_) {
    if (!(shape > Scalar(0)) || !(scale > Scalar(0)) || !std::isfinite(shape) ||
        !std::isfinite(scale)) {
      throw DomainError("gamma parameters must be positive and finite");
    }
  }

  /// Gamma(MN, 1/N): law of |h[0]|^2 for M antennas and N taps.
  static GammaParamsT reference(long m, long n) {
    if (m < 1 || n < 1) throw DomainError("antenna and tap counts must be >= 1");
    return {Scalar(m) * Scalar(n), Scalar(1) / Scalar(n)};
  }

  Scalar mean() const { return shape * scale; }
  Scalar variance() const { return shape * scale * scale; }
};

/// Fading margin in dB at probability p.
template <typename Scalar>
struct FadingMarginDbT {
  Scalar margin_db;
  ProbabilityT<Scalar> p;
};

struct HardeningCoefficient {
  double scv;
  bool hardened;
};

template <typename Scalar>
struct CurvePointT {
  Scalar gain_db;
  Scalar cdf;
};

using Probability = ProbabilityT<double>;
using GammaParams = GammaParamsT<double>;
using FadingMarginDb = FadingMarginDbT<double>;
using CurvePoint = CurvePointT<double>;

/// Squared coefficient of variation at or below which a channel counts as hardened.
inline constexpr double kHardeningThreshold = 1e-2;

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

namespace detail {

template <typename Scalar>
Scalar term_tolerance() {
  return std::max(Scalar(1e-14), Scalar(8) * std::numeric_limits<Scalar>::epsilon());
}

// Series and continued fraction need O(sqrt(a)) terms when x is close to a.
template <typename Scalar>
long iteration_cap(Scalar a) {
  return std::max<long>(500, 500 + static_cast<long>(20.0 * std::sqrt(static_cast<double>(a))));
}

// Stirling remainder lgamma(a) - [(a - 1/2) ln a - a + ln(2 pi)/2], a >= 10.
template <typename Scalar>
Scalar stirling_remainder(Scalar a) {
  const Scalar r = Scalar(1) / a;
  const Scalar r2 = r * r;
  return r * (Scalar(1) / 12 -
              r2 * (Scalar(1) / 360 -
                    r2 * (Scalar(1) / 1260 - r2 * (Scalar(1) / 1680 - r2 * (Scalar(1) / 1188)))));
}

// log of x^a e^-x / Gamma(a), expanded around x = a for large a.
template <typename Scalar>
Scalar log_prefactor(Scalar a, Scalar x) {
  if (a < Scalar(10)) return a * std::log(x) - x - std::lgamma(a);
  constexpr Scalar two_pi = Scalar(6.283185307179586476925286766559);
  const Scalar t = (x - a) / a;
  return a * (std::log1p(t) - t) + Scalar(0.5) * std::log(a / two_pi) - stirling_remainder(a);
}

template <typename Scalar>
Scalar lower_series(Scalar a, Scalar x) {
  const Scalar tol = term_tolerance<Scalar>();
  const long cap = iteration_cap(a);
  Scalar term = Scalar(1) / a;
  Scalar sum = term;
  for (long n = 1; n <= cap; ++n) {
    term *= x / (a + Scalar(n));
    sum += term;
    if (std::abs(term) < std::abs(sum) * tol) {
      return sum * std::exp(log_prefactor(a, x));
    }
  }
  throw ConvergenceError("incomplete gamma series did not converge");
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
template <typename Scalar>
Scalar upper_continued_fraction(Scalar a, Scalar x) {
  const Scalar tol = term_tolerance<Scalar>();
  const Scalar tiny = std::numeric_limits<Scalar>::min() / std::numeric_limits<Scalar>::epsilon();
  const long cap = iteration_cap(a);
  Scalar b = x + Scalar(1) - a;
  Scalar c = Scalar(1) / tiny;
  Scalar d = Scalar(1) / b;
  Scalar h = d;
  for (long i = 1; i <= cap; ++i) {
    const Scalar an = -Scalar(i) * (Scalar(i) - a);
    b += Scalar(2);
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = Scalar(1) / d;
    const Scalar delta = d * c;
    h *= delta;
    if (std::abs(delta - Scalar(1)) < tol) {
      return std::exp(log_prefactor(a, x)) * h;
    }
  }
  throw ConvergenceError("incomplete gamma continued fraction did not converge");
}

// Acklam's rational approximation of the standard normal quantile; only used
// to seed the Wilson-Hilferty start point.
inline double normal_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Start point for the unit-scale quantile.
template <typename Scalar>
Scalar quantile_start(Scalar a, Scalar p) {
  const double ad = static_cast<double>(a);
  const double pd = static_cast<double>(p);
  const double z = normal_quantile(pd);
  const double v = 1.0 / (9.0 * ad);
  const double base = 1.0 - v + z * std::sqrt(v);
  double x = ad * base * base * base;
  // Wilson-Hilferty breaks down deep in the lower tail of small shapes, where
  // P(a, x) ~ x^a / Gamma(a + 1) is accurate instead.
  const double tail = std::exp((std::log(pd) + std::lgamma(ad + 1.0)) / ad);
  if (!(x > 0.0) || ad < 1.0 || tail < 0.1 * ad) x = tail;
  if (!(x > 0.0) || !std::isfinite(x)) x = ad;
  return static_cast<Scalar>(x);
}

}  // namespace detail

/// ln Gamma(a) for a > 0.
template <typename Scalar>
Scalar log_gamma(Scalar a) {
  if (!(a > Scalar(0))) throw DomainError("log_gamma requires a > 0");
  return std::lgamma(a);
}

/// Regularized lower incomplete gamma function P(a, x).
template <typename Scalar>
Scalar regularized_gamma_p(Scalar a, Scalar x) {
  if (!(a > Scalar(0))) throw DomainError("regularized_gamma_p requires a > 0");
  if (std::isnan(x) || x < Scalar(0)) throw DomainError("regularized_gamma_p requires x >= 0");
  if (x == Scalar(0)) return Scalar(0);
  if (std::isinf(x)) return Scalar(1);
  if (x < a + Scalar(1)) return std::min(Scalar(1), detail::lower_series(a, x));
  return std::clamp(Scalar(1) - detail::upper_continued_fraction(a, x), Scalar(0), Scalar(1));
}

template <typename Scalar>
Scalar gamma_cdf(const GammaParamsT<Scalar>& params, Scalar x) {
  if (std::isnan(x) || x < Scalar(0)) throw DomainError("gamma_cdf requires x >= 0");
  return regularized_gamma_p(params.shape, x / params.scale);
}

/// Inverse of gamma_cdf: Newton iterations on P(a, x) - p, safeguarded by a
/// shrinking bisection bracket.
template <typename Scalar>
Scalar gamma_quantile(const GammaParamsT<Scalar>& params, ProbabilityT<Scalar> prob) {
  const Scalar a = params.shape;
  const Scalar p = prob.value();
  constexpr int kMaxIterations = 200;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();

  // Lower tail of small shapes: P(a, x) ~ x^a / Gamma(a + 1) puts the root
  // below the smallest normal number.
  const Scalar log_tail = (std::log(p) + std::lgamma(a + Scalar(1))) / a;
  if (log_tail < std::log(std::numeric_limits<Scalar>::min()) + Scalar(1)) {
    throw DomainError("gamma quantile underflows the floating-point range");
  }

  Scalar x = detail::quantile_start(a, p);

  // Bracket [lo, hi] with P(lo) <= p <= P(hi).
  Scalar lo = Scalar(0);
  Scalar hi = std::max(x, a);
  for (int i = 0; regularized_gamma_p(a, hi) < p; ++i) {
    if (i > 2000) throw ConvergenceError("gamma_quantile could not bracket the root");
    lo = hi;
    hi *= Scalar(2);
  }
  if (!(x > lo && x < hi)) x = (lo > Scalar(0)) ? std::sqrt(lo * hi) : hi / Scalar(2);

  for (int iter = 0; iter < kMaxIterations; ++iter) {
    if (!(x > std::numeric_limits<Scalar>::min())) {
      throw DomainError("gamma quantile underflows the floating-point range");
    }
    const Scalar f = regularized_gamma_p(a, x) - p;
    if (f == Scalar(0)) return x * params.scale;
    if (f < Scalar(0)) {
      lo = x;
    } else {
      hi = x;
    }
    const Scalar density = std::exp(detail::log_prefactor(a, x)) / x;
    Scalar next = (density > Scalar(0)) ? x - f / density : Scalar(-1);
    if (!(next > lo && next < hi) || !std::isfinite(next)) {
      next = (lo > Scalar(0) && hi / lo > Scalar(4)) ? std::sqrt(lo * hi) : (lo + hi) / Scalar(2);
    }
    const Scalar step = std::abs(next - x);
    x = next;
    if (step <= Scalar(4) * eps * x || (hi - lo) <= Scalar(4) * eps * hi) {
      return x * params.scale;
    }
  }
  throw ConvergenceError("gamma_quantile exhausted its iteration budget");
}

/// Median-referenced fading margin 10 log10(Q(0.5) / Q(p)) of a Gamma law.
/// Independent of the scale parameter.
template <typename Scalar>
FadingMarginDbT<Scalar> fading_margin(const GammaParamsT<Scalar>& params,
                                      ProbabilityT<Scalar> p) {
  const Scalar median = gamma_quantile(params, ProbabilityT<Scalar>(Scalar(0.5)));
  const Scalar tail = gamma_quantile(params, p);
  return {Scalar(10) * std::log10(median / tail), p};
}

/// Fading margin of the reference channel with m antennas and n taps.
inline FadingMarginDb fading_margin_analytic(long m, long n, Probability p) {
  return fading_margin(GammaParams::reference(m, n), p);
}

/// Squared coefficient of variation 1/(nm) of |h[0]|^2 and the hardening verdict.
inline HardeningCoefficient scv(long m, long n) {
  if (m < 1 || n < 1) throw DomainError("antenna and tap counts must be >= 1");
  const double value = 1.0 / (static_cast<double>(n) * static_cast<double>(m));
  return {value, value <= kHardeningThreshold};
}

/// CDF of the Gamma law sampled on a strictly increasing grid of dB gains.
template <typename Scalar>
std::vector<CurvePointT<Scalar>> analytic_cdf_curve(const GammaParamsT<Scalar>& params,
                                                    std::span<const Scalar> grid_db) {
  std::vector<CurvePointT<Scalar>> curve;
  curve.reserve(grid_db.size());
  for (std::size_t i = 0; i < grid_db.size(); ++i) {
    const Scalar g = grid_db[i];
    if (!std::isfinite(g)) throw DomainError("cdf grid must be finite");
    if (i > 0 && !(g > grid_db[i - 1])) throw DomainError("cdf grid must be strictly increasing");
    const Scalar x = std::pow(Scalar(10), g / Scalar(10));
    curve.push_back({g, gamma_cdf(params, x)});
  }
  return curve;
}

}  // namespace fmargin

#include "msfa/distributions.hpp"

#include "msfa/common.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace msfa::dist {

namespace {

constexpr double kEps = 1e-17;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 100000;

double gamma_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxIter; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper tail Q(a, x) by the Legendre continued fraction (modified Lentz).
double gamma_continued_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return h;
}

/// Inverts a continuous increasing CDF on [0, inf) by bracketing and bisection.
double invert(const std::function<double(double)>& cdf, double p, double start) {
  if (!(p >= 0.0 && p < 1.0)) throw InputError("quantile probability must lie in [0, 1)");
  if (p == 0.0) return 0.0;
  double lo = 0.0;
  double hi = std::max(start, 1.0);
  while (cdf(hi) < p) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericError("quantile search diverged");
  }
  for (int i = 0; i < 2000 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) throw InputError("gamma_p requires a > 0 and x >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return std::min(1.0, gamma_series(a, x));
  return std::max(0.0, 1.0 - gamma_continued_fraction(a, x));
}

double beta_i(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0))
    throw InputError("beta_i requires a, b > 0 and 0 <= x <= 1");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double chi2_cdf(double x, double dof) {
  if (!(dof > 0.0)) throw InputError("chi-square dof must be positive");
  if (!(x > 0.0)) return 0.0;
  return gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_quantile(double p, double dof) {
  if (!(dof > 0.0)) throw InputError("chi-square dof must be positive");
  return invert([dof](double x) { return chi2_cdf(x, dof); }, p, dof);
}

double f_cdf(double x, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw InputError("F degrees of freedom must be positive");
  if (!(x > 0.0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  return beta_i(0.5 * d1, 0.5 * d2, d1 * x / (d1 * x + d2));
}

double f_quantile(double p, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw InputError("F degrees of freedom must be positive");
  return invert([d1, d2](double x) { return f_cdf(x, d1, d2); }, p, 1.0);
}

}  // namespace msfa::dist

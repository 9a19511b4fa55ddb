#pragma once

namespace msfa::dist {

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);

/// Regularized incomplete beta I_x(a, b), a, b > 0, 0 <= x <= 1.
double beta_i(double a, double b, double x);

/// Chi-square CDF with (possibly non-integer) dof > 0.
double chi2_cdf(double x, double dof);
double chi2_quantile(double p, double dof);

/// Fisher F CDF with d1, d2 > 0 degrees of freedom.
double f_cdf(double x, double d1, double d2);
double f_quantile(double p, double d1, double d2);

}  // namespace msfa::dist

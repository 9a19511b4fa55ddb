#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msfa/distributions.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

using namespace msfa;

TEST_CASE("incomplete gamma against Boost") {
  for (double a : {0.1, 0.5, 1.0, 2.5, 7.0, 30.0, 150.0})
    for (double x : {0.0, 1e-3, 0.3, 1.0, 4.0, 12.0, 60.0, 300.0})
      CHECK(dist::gamma_p(a, x) == doctest::Approx(boost::math::gamma_p(a, x)).epsilon(1e-12).scale(1e-10));
}

TEST_CASE("incomplete beta against Boost") {
  for (double a : {0.3, 1.0, 2.0, 8.5, 60.0})
    for (double b : {0.4, 1.0, 3.0, 25.0, 500.0})
      for (double x : {0.0, 0.01, 0.2, 0.5, 0.8, 0.999, 1.0})
        CHECK(std::abs(dist::beta_i(a, b, x) - boost::math::ibeta(a, b, x)) < 1e-10);
}

TEST_CASE("chi-square CDF and quantile against Boost") {
  for (double k : {1.0, 2.0, 3.7, 10.0, 43.0, 200.0}) {
    const boost::math::chi_squared ref(k);
    for (double x : {0.05, 0.5, 1.0, 5.0, 20.0, 100.0, 400.0})
      CHECK(std::abs(dist::chi2_cdf(x, k) - boost::math::cdf(ref, x)) < 1e-10);
    for (double p : {0.01, 0.5, 0.9, 0.99, 0.999}) {
      CHECK(dist::chi2_quantile(p, k) == doctest::Approx(boost::math::quantile(ref, p)).epsilon(1e-9));
      CHECK(std::abs(dist::chi2_cdf(dist::chi2_quantile(p, k), k) - p) < 1e-9);
    }
  }
}

TEST_CASE("F CDF and quantile against Boost") {
  for (double d1 : {1.0, 2.0, 5.0, 12.0})
    for (double d2 : {3.0, 10.0, 100.0, 5000.0}) {
      const boost::math::fisher_f ref(d1, d2);
      for (double x : {0.01, 0.3, 1.0, 2.5, 8.0, 50.0})
        CHECK(std::abs(dist::f_cdf(x, d1, d2) - boost::math::cdf(ref, x)) < 1e-10);
      for (double p : {0.05, 0.5, 0.95, 0.99}) {
        CHECK(dist::f_quantile(p, d1, d2) == doctest::Approx(boost::math::quantile(ref, p)).epsilon(1e-9));
        CHECK(std::abs(dist::f_cdf(dist::f_quantile(p, d1, d2), d1, d2) - p) < 1e-9);
      }
    }
}

TEST_CASE("edge values") {
  CHECK(dist::chi2_cdf(0.0, 3.0) == 0.0);
  CHECK(dist::chi2_cdf(-1.0, 3.0) == 0.0);
  CHECK(dist::f_cdf(0.0, 2.0, 5.0) == 0.0);
  CHECK(dist::chi2_cdf(1e6, 3.0) == doctest::Approx(1.0));
}

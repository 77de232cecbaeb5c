#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "dppsd/numerics.hpp"
#include "dppsd/special.hpp"

namespace dppsd {
namespace {

TEST(RegularizedGamma, AgreesWithBoost) {
  for (double a : {0.5, 1.0, 2.5, 16.0, 32.0, 48.0, 100.0})
    for (double x : {0.0, 0.1, 1.0, 5.0, 16.0, 30.0, 60.0, 150.0})
      EXPECT_NEAR(regularized_gamma_p(a, x), boost::math::gamma_p(a, x), 1e-12) << "a=" << a << " x=" << x;
}

TEST(RegularizedGamma, ExponentialCase) {
  // P(1, x) = 1 - e^{-x}
  for (double x : {0.3, 2.0, 7.0}) EXPECT_NEAR(regularized_gamma_p(1.0, x), 1.0 - std::exp(-x), 1e-14);
}

TEST(InverseGamma, AgreesWithBoost) {
  for (double a : {1.0, 8.0, 16.0, 24.0, 48.0})
    for (double p : {0.01, 0.5, 0.9, 0.999}) {
      const double ours = inverse_regularized_gamma_p(a, p);
      EXPECT_NEAR(ours, boost::math::gamma_p_inv(a, p), 1e-8 * std::max(1.0, ours));
      EXPECT_NEAR(regularized_gamma_p(a, ours), p, 1e-9);
    }
}

TEST(ChiSquareQuantile, AgreesWithBoost) {
  for (double dof : {2.0, 8.0, 32.0, 48.0, 64.0}) {
    const boost::math::chi_squared dist(dof);
    for (double p : {0.5, 0.99, 0.999}) {
      const double q = chi_square_quantile(p, dof);
      EXPECT_NEAR(q, boost::math::quantile(dist, p), 1e-8 * q);
    }
  }
}

TEST(ChiSquareQuantile, TwoDofClosedForm) {
  // chi2 with 2 dof is exponential with mean 2.
  EXPECT_NEAR(chi_square_quantile(0.999, 2.0), -2.0 * std::log(0.001), 1e-9);
}

TEST(ChiSquareQuantile, EmpiricalCoverage) {
  const int n_r = 8;
  const double sigma2 = 1.5;
  const double f2 = 0.5 * sigma2 * chi_square_quantile(0.99, 2.0 * n_r);
  Rng rng = make_rng(21);
  int inside = 0;
  const int draws = 50000;
  for (int i = 0; i < draws; ++i)
    if (gaussian_complex_vector<double>(n_r, sigma2, rng).squaredNorm() <= f2) ++inside;
  EXPECT_NEAR(static_cast<double>(inside) / draws, 0.99, 0.003);
}

}  // namespace
}  // namespace dppsd

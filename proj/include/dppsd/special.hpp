#pragma once

namespace dppsd {

/// Regularized lower incomplete gamma function P(a, x), a > 0, x >= 0.
double regularized_gamma_p(double a, double x);

/// x such that P(a, x) = p, found by bisection to an absolute width of
/// `tolerance * max(1, x)`.
double inverse_regularized_gamma_p(double a, double p, double tolerance = 1e-10);

/// Quantile of the chi-square distribution with `dof` degrees of freedom.
double chi_square_quantile(double p, double dof, double tolerance = 1e-10);

}  // namespace dppsd

#pragma once

namespace aml {

/// Inverse of the standard normal CDF. Acklam's rational approximation
/// followed by one Halley refinement; absolute error is below 1e-9 on (0,1)
/// (in practice ~1e-15). Throws ConfigError outside [0,1]; p=0 and p=1 map
/// to -inf/+inf.
double inverse_normal_cdf(double p);

/// Regularized incomplete beta function I_x(a, b), a,b > 0, x in [0,1].
/// Continued-fraction (modified Lentz) evaluation, relative error <= 1e-12
/// for the parameter ranges used by the Student-t tail.
double regularized_incomplete_beta(double a, double b, double x);

} // namespace aml

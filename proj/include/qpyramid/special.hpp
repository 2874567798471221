#pragma once

// Special functions used by the priors and likelihoods. Everything is
// evaluated in double precision; log-gamma is reentrant.

namespace qpyramid::special {

double log_gamma(double x);
double log_beta(double a, double b);

// log(n!) for integer-valued n >= 0.
double log_factorial(double n);

// Regularized incomplete beta I_x(a, b) = G(x; a, b), the Beta(a, b) cdf.
// Continued fraction (modified Lentz) with the usual symmetry switch;
// relative accuracy around 1e-13 across the parameter range used here.
double incomplete_beta(double x, double a, double b);

// log I_x(a, b), accurate deep in the lower tail where I_x underflows.
double log_incomplete_beta(double x, double a, double b);

// log of the Beta(a, b) density at x in (0, 1).
double beta_log_density(double x, double a, double b);

double normal_cdf(double z);
// Inverse of normal_cdf on (0, 1); +-infinity at the endpoints.
double normal_quantile(double p);

}  // namespace qpyramid::special

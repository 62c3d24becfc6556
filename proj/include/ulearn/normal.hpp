#pragma once

namespace ulearn {

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse of the standard normal CDF for p in (0, 1). Rational approximation
/// refined by one Halley step; absolute error well below 1e-9.
double normal_quantile(double p);

/// z_{1 - alpha/2}.
double two_sided_z(double alpha);

}  // namespace ulearn

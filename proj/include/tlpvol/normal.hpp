#pragma once

namespace tlpvol {

/// Standard normal CDF via erfc; accurate to ~1e-15 absolute.
double normal_cdf(double x) noexcept;

/// Standard normal quantile. Rational first guess refined by one Halley
/// step against normal_cdf; throws ValidationError outside (0, 1).
double normal_quantile(double p);

}  // namespace tlpvol

#pragma once

#include <functional>
#include <span>

namespace tlpvol {

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  int subdivisions = 0;
};

struct QuadratureOptions {
  double abs_tol = 1e-12;
  int max_subdivisions = 60;
};

/// Globally adaptive 7/15-point Gauss-Kronrod integration of f over the
/// segments delimited by `breakpoints` (sorted, at least two entries).
/// The interval with the largest error estimate is bisected until the summed
/// estimate falls below abs_tol. Throws NumericalError carrying the achieved
/// error when the subdivision budget runs out.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    std::span<const double> breakpoints,
                                    QuadratureOptions opts = {});

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    QuadratureOptions opts = {});

}  // namespace tlpvol

#pragma once

// Test-side oracles. Everything here is written independently of the
// library's estimator code: plain loops, long double, Gaussian elimination.

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "tlpvol/jump_diffusion_sim.hpp"
#include "tlpvol/kernel_math.hpp"

namespace oracle {

inline tlpvol::Path make_path(std::vector<double> values, double delta) {
  tlpvol::Path p;
  p.n = values.size() - 1;
  p.delta = delta;
  p.T = delta * static_cast<double>(p.n);
  p.values = std::move(values);
  return p;
}

inline double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

// Solves A b = r with partial pivoting.
inline std::vector<long double> gauss_solve(std::vector<std::vector<long double>> a,
                                            std::vector<long double> r) {
  const std::size_t m = r.size();
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t piv = c;
    for (std::size_t i = c + 1; i < m; ++i)
      if (std::fabs(a[i][c]) > std::fabs(a[piv][c])) piv = i;
    std::swap(a[c], a[piv]);
    std::swap(r[c], r[piv]);
    if (a[c][c] == 0.0L) throw std::runtime_error("singular oracle system");
    for (std::size_t i = c + 1; i < m; ++i) {
      const long double f = a[i][c] / a[c][c];
      for (std::size_t k = c; k < m; ++k) a[i][k] -= f * a[c][k];
      r[i] -= f * r[c];
    }
  }
  std::vector<long double> b(m);
  for (std::size_t i = m; i-- > 0;) {
    long double s = r[i];
    for (std::size_t k = i + 1; k < m; ++k) s -= a[i][k] * b[k];
    b[i] = s / a[i][i];
  }
  return b;
}

// Weighted least squares of Y_i on (X_{i-1} - x)^0..p with weights
// K((X_{i-1} - x)/h), censored responses zeroed, via normal equations.
inline std::vector<double> wls(const tlpvol::Path& path, double x, double h,
                               const tlpvol::KernelSpec& kernel, double threshold, int p) {
  const std::size_t m = static_cast<std::size_t>(p) + 1;
  std::vector<std::vector<long double>> a(m, std::vector<long double>(m, 0.0L));
  std::vector<long double> r(m, 0.0L);
  for (std::size_t i = 1; i <= path.n; ++i) {
    const long double xl = path.values[i - 1];
    const long double d = xl - x;
    const long double w = kernel(static_cast<double>(d / h));
    if (w == 0.0L) continue;
    const long double inc = static_cast<long double>(path.values[i]) - xl;
    const long double y = (inc * inc <= threshold) ? inc * inc / path.delta : 0.0L;
    std::vector<long double> pw(2 * m - 1, 1.0L);
    for (std::size_t k = 1; k < pw.size(); ++k) pw[k] = pw[k - 1] * d;
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = 0; k < m; ++k) a[j][k] += w * pw[j + k];
      r[j] += w * pw[j] * y;
    }
  }
  const auto b = gauss_solve(a, r);
  return std::vector<double>(b.begin(), b.end());
}

// Path whose responses are exactly m(X_{i-1}): X_i = X_{i-1} +/- sqrt(delta m(X_{i-1})).
// The sign is chosen to keep the walk inside [lo, hi].
inline tlpvol::Path polynomial_response_path(const std::function<double(double)>& m, double x0,
                                             double lo, double hi, std::size_t n, double delta,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> v{x0};
  for (std::size_t i = 0; i < n; ++i) {
    const double step = std::sqrt(delta * m(v.back()));
    double next = v.back() + (coin(rng) ? step : -step);
    if (next > hi) next = v.back() - step;
    if (next < lo) next = v.back() + step;
    v.push_back(next);
  }
  return make_path(std::move(v), delta);
}

// Random estimation instance: iid states spread over [x - h, x + 2h] so
// supported and unsupported points both occur, and a threshold that censors
// part of the increments.
struct Instance {
  tlpvol::Path path;
  double x;
  double h;
  double threshold;
};

inline Instance random_instance(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Instance in;
  in.x = 4.0 * u(rng) - 2.0;
  in.h = 0.05 + 0.5 * u(rng);
  std::vector<double> v(n + 1);
  for (auto& e : v) e = in.x + in.h * (3.0 * u(rng) - 1.0);
  in.path = make_path(std::move(v), 1e-3 * (0.5 + u(rng)));
  in.threshold = std::pow(in.h, 2) * (0.5 + u(rng));
  return in;
}

// Observed responses (dX)^2/delta of a path, as used by the estimators.
inline double response(const tlpvol::Path& path, std::size_t i) {
  const double d = path.values[i] - path.values[i - 1];
  return d * d / path.delta;
}

}  // namespace oracle

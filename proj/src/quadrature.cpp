#include "tlpvol/quadrature.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <queue>
#include <string>
#include <vector>

#include "tlpvol/errors.hpp"

namespace tlpvol {
namespace {

// QUADPACK qk15 abscissae and weights.
constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gauss_kronrod_15(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[j] * pair;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * pair;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    std::span<const double> breakpoints, QuadratureOptions opts) {
  if (breakpoints.size() < 2) throw ValidationError("quadrature needs at least two breakpoints");
  std::priority_queue<Segment> heap;
  double total = 0.0;
  double error = 0.0;
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1]))
      throw ValidationError("quadrature breakpoints must be strictly increasing");
    Segment s = gauss_kronrod_15(f, breakpoints[i - 1], breakpoints[i]);
    total += s.value;
    error += s.error;
    heap.push(s);
  }

  int splits = 0;
  while (error > opts.abs_tol) {
    if (splits >= opts.max_subdivisions) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "quadrature did not converge after %d subdivisions: achieved abs error %.3e "
                    "(requested %.3e)",
                    splits, error, opts.abs_tol);
      throw NumericalError(buf);
    }
    const Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Segment left = gauss_kronrod_15(f, worst.a, mid);
    const Segment right = gauss_kronrod_15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++splits;
  }

  // Re-sum from the leaves so the running-update drift does not leak into the value.
  double resummed = 0.0;
  double reerror = 0.0;
  while (!heap.empty()) {
    resummed += heap.top().value;
    reerror += heap.top().error;
    heap.pop();
  }
  return {resummed, reerror, splits};
}

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    QuadratureOptions opts) {
  const std::array<double, 2> bp{a, b};
  return integrate_adaptive(f, bp, opts);
}

}  // namespace tlpvol

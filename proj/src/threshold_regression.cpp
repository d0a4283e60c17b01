#include "tlpvol/threshold_regression.hpp"

#include <omp.h>

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <sstream>

#include "tlpvol/errors.hpp"

namespace tlpvol {
namespace {

// Observations per reduction block. Fixed, so sums are reproducible.
constexpr std::size_t kBlock = 8192;

void require_bandwidth(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("bandwidth h must be positive");
}

void require_threshold(double threshold) {
  if (!(threshold > 0.0)) throw ValidationError("threshold must be positive");
}

void require_path(const Path& path) {
  if (path.values.size() != path.n + 1 || path.n < 1)
    throw ValidationError("path must hold n + 1 observations");
  if (!(path.delta > 0.0)) throw ValidationError("path delta must be positive");
}

// Accumulates `width` running sums over observation indices [0, n) in fixed
// blocks; partial block sums are combined serially in block order.
template <class Body>
std::vector<double> blocked_sum(std::size_t n, std::size_t width, Body&& body) {
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(blocks * width, 0.0);
  const auto nblocks = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static) if (nblocks > 1 && !omp_in_parallel())
  for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
    double* acc = partial.data() + static_cast<std::size_t>(b) * width;
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(n, lo + kBlock);
    for (std::size_t i = lo; i < hi; ++i) body(i, acc);
  }
  std::vector<double> total(width, 0.0);
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t w = 0; w < width; ++w) total[w] += partial[b * width + w];
  return total;
}

// Per-observation contribution shared by the blocked and the serial paths.
// Layout of acc: s[0..2p], q[0..p], n_effective, n_flagged.
struct MomentBody {
  const std::vector<double>& v;
  double x, h, inv_delta, threshold;
  const KernelSpec& kernel;
  int p;

  void operator()(std::size_t i, double* acc) const {
    const double dx = v[i + 1] - v[i];
    const double sq = dx * dx;
    const bool keep = sq <= threshold;
    const std::size_t ns = 2 * static_cast<std::size_t>(p) + 1;
    if (!keep) acc[ns + p + 2] += 1.0;
    const double d = v[i] - x;
    const double w = kernel(d / h);
    if (w == 0.0) return;
    acc[ns + p + 1] += 1.0;
    const double y = keep ? sq * inv_delta : 0.0;
    double term = w;
    for (std::size_t k = 0; k < ns; ++k) {
      acc[k] += term;
      if (k <= static_cast<std::size_t>(p)) acc[ns + k] += term * y;
      term *= d;
    }
  }
};

DesignMoments unpack(const std::vector<double>& acc, const Path& path, double x, double h, int p) {
  const std::size_t ns = 2 * static_cast<std::size_t>(p) + 1;
  DesignMoments m;
  m.x = x;
  m.h = h;
  m.p = p;
  m.delta = path.delta;
  m.s.assign(acc.begin(), acc.begin() + ns);
  m.q.assign(acc.begin() + ns, acc.begin() + ns + p + 1);
  for (auto& v : m.s) v /= h;
  for (auto& v : m.q) v /= h;
  m.n_effective = static_cast<std::size_t>(acc[ns + p + 1]);
  m.n_flagged = static_cast<std::size_t>(acc[ns + p + 2]);
  m.n_increments = path.n;
  return m;
}

void check_moment_args(const Path& path, double h, double threshold, int p) {
  require_path(path);
  require_bandwidth(h);
  require_threshold(threshold);
  if (p < 0) throw ValidationError("polynomial order p must be >= 0");
}

}  // namespace

ThresholdSpec::ThresholdSpec(double eta, double scale) : eta_(eta), scale_(scale) {
  if (!(eta > 0.0 && eta < 1.0)) {
    std::ostringstream os;
    os << "threshold exponent eta = " << eta << " outside (0, 1)";
    throw ValidationError(os.str());
  }
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw ValidationError("threshold scale must be positive and finite");
}

double ThresholdSpec::value(double delta) const { return threshold_value(*this, delta); }

double threshold_value(const ThresholdSpec& spec, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    std::ostringstream os;
    os << "threshold needs delta in (0, 1), got " << delta;
    throw ValidationError(os.str());
  }
  return spec.scale() * std::pow(delta, spec.eta());
}

std::string Estimator::name() const {
  switch (kind) {
    case EstimatorKind::local_linear:
      return "local_linear";
    case EstimatorKind::nw_threshold:
      return "nw_threshold";
    case EstimatorKind::nw_plain:
      return "nw_plain";
    case EstimatorKind::local_poly:
      return "local_poly(" + std::to_string(p) + ")";
  }
  return "unknown";
}

Estimator Estimator::parse(std::string_view text) {
  if (text == "local_linear") return {EstimatorKind::local_linear, 1};
  if (text == "nw_threshold") return {EstimatorKind::nw_threshold, 0};
  if (text == "nw_plain") return {EstimatorKind::nw_plain, 0};
  constexpr std::string_view prefix = "local_poly";
  if (text.starts_with(prefix)) {
    std::string_view rest = text.substr(prefix.size());
    if (!rest.empty() && (rest.front() == '(' || rest.front() == ':')) {
      const bool paren = rest.front() == '(';
      rest.remove_prefix(1);
      if (paren) {
        if (rest.empty() || rest.back() != ')') throw ValidationError("bad estimator: " + std::string(text));
        rest.remove_suffix(1);
      }
      int p = -1;
      const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), p);
      if (ec == std::errc() && ptr == rest.data() + rest.size() && p >= 0 && p <= 6)
        return {EstimatorKind::local_poly, p};
    }
  }
  throw ValidationError("unknown estimator '" + std::string(text) +
                        "'; available: local_linear nw_threshold nw_plain local_poly(p)");
}

std::vector<std::uint8_t> classify_increments(const Path& path, double threshold) {
  require_path(path);
  require_threshold(threshold);
  std::vector<std::uint8_t> keep(path.n);
  const auto& v = path.values;
  const auto n = static_cast<std::ptrdiff_t>(path.n);
#pragma omp parallel for schedule(static) if (n > static_cast<std::ptrdiff_t>(kBlock) && !omp_in_parallel())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double dx = v[i + 1] - v[i];
    keep[i] = (dx * dx <= threshold) ? 1 : 0;
  }
  return keep;
}

double design_moment(const Path& path, double x, double h, const KernelSpec& kernel, int k) {
  require_path(path);
  require_bandwidth(h);
  if (k < 0) throw ValidationError("moment index k must be >= 0");
  double sum = 0.0;
  for (std::size_t i = 0; i < path.n; ++i) {
    const double d = path.values[i] - x;
    const double w = kernel(d / h);
    if (w != 0.0) sum += w * std::pow(d, k);
  }
  return sum / h;
}

double response_moment(const Path& path, double x, double h, const KernelSpec& kernel,
                       double threshold, int k) {
  require_path(path);
  require_bandwidth(h);
  require_threshold(threshold);
  if (k < 0) throw ValidationError("moment index k must be >= 0");
  double sum = 0.0;
  for (std::size_t i = 0; i < path.n; ++i) {
    const double d = path.values[i] - x;
    const double w = kernel(d / h);
    if (w == 0.0) continue;
    const double dx = path.values[i + 1] - path.values[i];
    const double sq = dx * dx;
    if (sq <= threshold) sum += w * std::pow(d, k) * sq / path.delta;
  }
  return sum / h;
}

DesignMoments accumulate_moments(const Path& path, double x, double h, const KernelSpec& kernel,
                                 double threshold, int p) {
  check_moment_args(path, h, threshold, p);
  const std::size_t width = 3 * static_cast<std::size_t>(p) + 4;
  const MomentBody body{path.values, x, h, 1.0 / path.delta, threshold, kernel, p};
  return unpack(blocked_sum(path.n, width, body), path, x, h, p);
}

std::vector<double> solve_local_poly(const DesignMoments& m) {
  const int dim = m.p + 1;
  if (m.n_effective < static_cast<std::size_t>(dim)) {
    std::ostringstream os;
    os << m.n_effective << " observations carry kernel weight at x = " << m.x << ", need "
       << dim;
    throw InsufficientDataError(os.str());
  }
  // Work in u = (X - x)/h so the matrix condition reflects the data, not h.
  Eigen::MatrixXd a(dim, dim);
  Eigen::VectorXd b(dim);
  for (int j = 0; j < dim; ++j) {
    b(j) = m.q[j] / std::pow(m.h, j);
    for (int k = 0; k < dim; ++k) a(j, k) = m.s[j + k] / std::pow(m.h, j + k);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(dim - 1);
  if (!(smin > 0.0) || !(smax / smin <= kMaxCondition) || !std::isfinite(smax)) {
    std::ostringstream os;
    os << "design matrix at x = " << m.x << " has condition number "
       << (smin > 0.0 ? smax / smin : INFINITY) << " (cap " << kMaxCondition << ")";
    throw InsufficientDataError(os.str());
  }
  const Eigen::VectorXd gamma = svd.solve(b);
  std::vector<double> beta(dim);
  for (int j = 0; j < dim; ++j) beta[j] = gamma(j) / std::pow(m.h, j);
  return beta;
}

std::vector<double> local_poly_fit(const Path& path, double x, double h, const KernelSpec& kernel,
                                   double threshold, int p) {
  return solve_local_poly(accumulate_moments(path, x, h, kernel, threshold, p));
}

EstimateResult local_linear_sigma2(const Path& path, double x, double h, const KernelSpec& kernel,
                                   double threshold) {
  const DesignMoments m = accumulate_moments(path, x, h, kernel, threshold, 1);
  const double s0 = m.s[0], s1 = m.s[1], s2 = m.s[2];
  if (m.n_effective < 2 || !(s0 > 0.0) || !(s2 > 0.0)) {
    std::ostringstream os;
    os << m.n_effective << " observations carry kernel weight at x = " << x;
    throw InsufficientDataError(os.str());
  }

  // Explicit weights K_i {delta S2 / h^2 - ((X_{i-1} - x)/h) delta S1 / h}.
  const double delta = path.delta;
  const double c2 = delta * s2 / (h * h);
  const double c1 = delta * s1 / h;
  const auto& v = path.values;
  const auto sums = blocked_sum(path.n, 2, [&](std::size_t i, double* acc) {
    const double u = (v[i] - x) / h;
    const double k = kernel(u);
    if (k == 0.0) return;
    const double w = k * (c2 - u * c1);
    const double dx = v[i + 1] - v[i];
    const double sq = dx * dx;
    acc[0] += w;
    if (sq <= threshold) acc[1] += w * sq / delta;
  });
  const double den = sums[0];
  // den = delta (S0 S2 - S1^2) / h; compare against its first term.
  const double den_scale = delta * s0 * s2 / h;
  if (!(den > 1e-12 * den_scale)) {
    std::ostringstream os;
    os << "local linear weights degenerate at x = " << x << " (effective points coincide)";
    throw InsufficientDataError(os.str());
  }

  EstimateResult r;
  r.x = x;
  r.h = h;
  r.sigma2_hat = sums[1] / den;
  const double slope = (s0 * m.q[1] - s1 * m.q[0]) / (s0 * s2 - s1 * s1);
  r.beta = {r.sigma2_hat, slope};
  r.local_time_hat = m.local_time_hat();
  r.n_effective = m.n_effective;
  r.flagged_fraction = m.flagged_fraction();
  return r;
}

double nw_sigma2(const Path& path, double x, double h, const KernelSpec& kernel,
                 std::optional<double> threshold) {
  const DesignMoments m = accumulate_moments(path, x, h, kernel, threshold.value_or(kNoThreshold), 0);
  if (!(m.s[0] > 0.0)) {
    std::ostringstream os;
    os << "kernel weights sum to zero at x = " << x;
    throw InsufficientDataError(os.str());
  }
  return m.q[0] / m.s[0];
}

double local_time_hat(const Path& path, double x, double h, const KernelSpec& kernel) {
  require_path(path);
  require_bandwidth(h);
  const auto& v = path.values;
  const auto sum = blocked_sum(path.n, 1, [&](std::size_t i, double* acc) {
    acc[0] += kernel((v[i] - x) / h);
  });
  return sum[0] * path.delta / h;
}

EstimateResult estimate(const Path& path, double x, double h, const KernelSpec& kernel,
                        double threshold, const Estimator& estimator) {
  switch (estimator.kind) {
    case EstimatorKind::local_linear:
      return local_linear_sigma2(path, x, h, kernel, threshold);
    case EstimatorKind::local_poly: {
      const DesignMoments m = accumulate_moments(path, x, h, kernel, threshold, estimator.p);
      EstimateResult r;
      r.x = x;
      r.h = h;
      r.beta = solve_local_poly(m);
      r.sigma2_hat = r.beta[0];
      r.local_time_hat = m.local_time_hat();
      r.n_effective = m.n_effective;
      r.flagged_fraction = m.flagged_fraction();
      return r;
    }
    case EstimatorKind::nw_threshold:
    case EstimatorKind::nw_plain: {
      const double thr = estimator.kind == EstimatorKind::nw_plain ? kNoThreshold : threshold;
      const DesignMoments m = accumulate_moments(path, x, h, kernel, thr, 0);
      if (!(m.s[0] > 0.0)) {
        std::ostringstream os;
        os << "kernel weights sum to zero at x = " << x;
        throw InsufficientDataError(os.str());
      }
      EstimateResult r;
      r.x = x;
      r.h = h;
      r.sigma2_hat = m.q[0] / m.s[0];
      r.beta = {r.sigma2_hat};
      r.local_time_hat = m.local_time_hat();
      r.n_effective = m.n_effective;
      r.flagged_fraction = m.flagged_fraction();
      return r;
    }
  }
  throw ValidationError("unknown estimator kind");
}

namespace {

GridEstimate estimate_point(const Path& path, double x, double h, const KernelSpec& kernel,
                            double threshold, const Estimator& estimator) {
  GridEstimate g;
  g.x = x;
  try {
    g.result = estimate(path, x, h, kernel, threshold, estimator);
  } catch (const Error& e) {
    g.error = e.what();
  }
  return g;
}

}  // namespace

std::vector<GridEstimate> estimate_grid(const Path& path, std::span<const double> xs, double h,
                                        const KernelSpec& kernel, double threshold,
                                        const Estimator& estimator) {
  require_path(path);
  require_bandwidth(h);
  require_threshold(threshold);
  std::vector<GridEstimate> out(xs.size());
  const auto count = static_cast<std::ptrdiff_t>(xs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t j = 0; j < count; ++j)
    out[j] = estimate_point(path, xs[j], h, kernel, threshold, estimator);
  return out;
}

namespace serial {

DesignMoments accumulate_moments(const Path& path, double x, double h, const KernelSpec& kernel,
                                 double threshold, int p) {
  check_moment_args(path, h, threshold, p);
  std::vector<double> acc(3 * static_cast<std::size_t>(p) + 4, 0.0);
  const MomentBody body{path.values, x, h, 1.0 / path.delta, threshold, kernel, p};
  for (std::size_t i = 0; i < path.n; ++i) body(i, acc.data());
  return unpack(acc, path, x, h, p);
}

std::vector<GridEstimate> estimate_grid(const Path& path, std::span<const double> xs, double h,
                                        const KernelSpec& kernel, double threshold,
                                        const Estimator& estimator) {
  require_path(path);
  require_bandwidth(h);
  require_threshold(threshold);
  std::vector<GridEstimate> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(estimate_point(path, x, h, kernel, threshold, estimator));
  return out;
}

}  // namespace serial

}  // namespace tlpvol

#include "tlpvol/asymptotics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "tlpvol/errors.hpp"
#include "tlpvol/normal.hpp"

namespace tlpvol {

AsymptoticConstants asymptotic_constants(const KernelSpec& kernel) {
  const double k11 = kernel_moment(kernel, 1, 1);
  const double k12 = kernel_moment(kernel, 1, 2);
  const double k13 = kernel_moment(kernel, 1, 3);
  const double k20 = kernel_moment(kernel, 2, 0);
  const double k21 = kernel_moment(kernel, 2, 1);
  const double k22 = kernel_moment(kernel, 2, 2);
  const double spread = k12 - k11 * k11;
  if (!(spread > 0.0))
    throw NumericalError("kernel '" + kernel.name() + "' is degenerate: K_1^2 - (K_1^1)^2 <= 0");
  AsymptoticConstants c;
  c.spread = spread;
  c.v_x = (k20 * k12 * k12 + k22 * k11 * k11 - 2.0 * k21 * k12 * k11) / (spread * spread);
  c.bias_c = (k12 * k12 - k11 * k13) / spread;
  return c;
}

double variance_constant(const KernelSpec& kernel) { return asymptotic_constants(kernel).v_x; }

double bias_correction(const KernelSpec& kernel, double curvature, double h) {
  if (!(h > 0.0)) throw ValidationError("bias_correction: h must be positive");
  if (curvature == 0.0) return 0.0;
  return 0.5 * curvature * asymptotic_constants(kernel).bias_c * h * h;
}

namespace {

Eigen::MatrixXd moment_matrix(const KernelSpec& kernel, int power, int p) {
  Eigen::MatrixXd m(p + 1, p + 1);
  for (int i = 0; i <= p; ++i)
    for (int j = 0; j <= p; ++j) m(i, j) = kernel_moment(kernel, power, i + j);
  return m;
}

}  // namespace

double local_poly_variance_constant(const KernelSpec& kernel, int p) {
  if (p < 0) throw ValidationError("p must be >= 0");
  const Eigen::MatrixXd s = moment_matrix(kernel, 1, p);
  const Eigen::MatrixXd s_star = moment_matrix(kernel, 2, p);
  const Eigen::MatrixXd s_inv = s.fullPivLu().inverse();
  return (s_inv * s_star * s_inv)(0, 0);
}

double local_poly_bias_constant(const KernelSpec& kernel, int p) {
  if (p < 0) throw ValidationError("p must be >= 0");
  const Eigen::MatrixXd s = moment_matrix(kernel, 1, p);
  Eigen::VectorXd c(p + 1);
  for (int i = 0; i <= p; ++i) c(i) = kernel_moment(kernel, 1, p + 1 + i);
  return s.fullPivLu().solve(c)(0);
}

InferenceResult confidence_interval(const EstimateResult& est, double delta, double level,
                                    double variance_const, double bias) {
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level must lie in (0, 1)");
  if (!(delta > 0.0)) throw ValidationError("delta must be positive");
  if (!(est.local_time_hat > 0.0))
    throw NumericalError("no local occupation: L_hat(T, x) = 0 at x = " + std::to_string(est.x));
  InferenceResult r;
  r.estimate = est;
  r.level = level;
  r.bias_correction = bias;
  r.center = est.sigma2_hat - bias;
  r.std_error =
      std::abs(est.sigma2_hat) * std::sqrt(2.0 * variance_const * delta / (est.h * est.local_time_hat));
  const double z = normal_quantile(0.5 * (1.0 + level));
  r.ci_low = r.center - z * r.std_error;
  r.ci_high = r.center + z * r.std_error;
  return r;
}

InferenceResult confidence_interval(const EstimateResult& est, double delta, double level,
                                    std::optional<double> curvature, const KernelSpec& kernel) {
  const double bias = curvature ? bias_correction(kernel, *curvature, est.h) : 0.0;
  return confidence_interval(est, delta, level, variance_constant(kernel), bias);
}

double optimal_bandwidth(double delta, double local_time_hat, double curvature,
                         const KernelSpec& kernel) {
  if (!(delta > 0.0)) throw ValidationError("optimal_bandwidth: delta must be positive");
  if (!(local_time_hat > 0.0))
    throw NumericalError("optimal_bandwidth: no local occupation (L_hat <= 0)");
  if (curvature == 0.0 || !std::isfinite(curvature))
    throw NumericalError("flat diffusion: MSE bandwidth undefined");
  const double k11 = kernel_moment(kernel, 1, 1);
  const double k12 = kernel_moment(kernel, 1, 2);
  const double k13 = kernel_moment(kernel, 1, 3);
  const double spread = k12 - k11 * k11;
  const double bracket = curvature * (k12 * k12 - k11 * k13);
  if (bracket == 0.0)
    throw NumericalError("optimal_bandwidth: kernel bias bracket vanishes");
  return std::pow(4.0 * delta * spread * spread / (local_time_hat * bracket * bracket), 0.2);
}

double plugin_curvature(const Path& path, double x, double h, const KernelSpec& kernel,
                        double threshold) {
  const double hp = 2.0 * h;
  const double lo = local_linear_sigma2(path, x - hp, hp, kernel, threshold).sigma2_hat;
  const double mid = local_linear_sigma2(path, x, hp, kernel, threshold).sigma2_hat;
  const double hi = local_linear_sigma2(path, x + hp, hp, kernel, threshold).sigma2_hat;
  return (lo - 2.0 * mid + hi) / (hp * hp);
}

bool RateReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

std::string RateReport::to_string() const {
  std::ostringstream os;
  for (const auto& c : checks)
    os << (c.passed ? "pass" : "FAIL") << "  " << c.name << "  (slack " << c.slack << ")\n";
  os << (passed() ? "all rate conditions hold" : "rate conditions violated") << "\n";
  return os.str();
}

RateReport check_rate_conditions(const RateParams& params, bool ia_present) {
  const double eta = params.eta, phi = params.phi, alpha = params.alpha;
  RateReport report;
  const auto add = [&report](std::string name, double slack) {
    report.checks.push_back({std::move(name), slack, slack > 0.0});
  };
  add("0 < eta < 1", std::min(eta, 1.0 - eta));
  add("phi > 0", phi);
  add("2*phi < 1", 1.0 - 2.0 * phi);
  if (ia_present) {
    add("alpha < 1", 1.0 - alpha);
    add("eta/2 > phi", eta / 2.0 - phi);
    add("(1 - alpha*eta) - 1/2 + phi/2 > 0", (1.0 - alpha * eta) - 0.5 + phi / 2.0);
    add("eta*(1 - alpha/2) - 1/2 + phi/2 > 0", eta * (1.0 - alpha / 2.0) - 0.5 + phi / 2.0);
  }
  return report;
}

}  // namespace tlpvol

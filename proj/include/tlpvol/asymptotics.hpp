#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tlpvol/kernel_math.hpp"
#include "tlpvol/threshold_regression.hpp"

namespace tlpvol {

/// Kernel constants of the local linear limit law.
///   v_x    = (K_2^0 (K_1^2)^2 + K_2^2 (K_1^1)^2 - 2 K_2^1 K_1^2 K_1^1) / (K_1^2 - (K_1^1)^2)^2
///   bias_c = ((K_1^2)^2 - K_1^1 K_1^3) / (K_1^2 - (K_1^1)^2)
struct AsymptoticConstants {
  double v_x = 0.0;
  double bias_c = 0.0;
  double spread = 0.0;  // K_1^2 - (K_1^1)^2
};

AsymptoticConstants asymptotic_constants(const KernelSpec& kernel);

double variance_constant(const KernelSpec& kernel);

/// 0.5 * curvature * bias_c * h^2, with curvature = (sigma^2)''(x).
double bias_correction(const KernelSpec& kernel, double curvature, double h);

/// Entry (0, 0) of S^{-1} S* S^{-1} with S = (K_1^{i+j}), S* = (K_2^{i+j}),
/// i, j = 0..p. Equals variance_constant for p = 1.
double local_poly_variance_constant(const KernelSpec& kernel, int p);

/// Entry 0 of S^{-1} c_p, c_p = (K_1^{p+1}, ..., K_1^{2p+1}). Equals bias_c for p = 1.
double local_poly_bias_constant(const KernelSpec& kernel, int p);

struct InferenceResult {
  EstimateResult estimate;
  double center = 0.0;           // sigma2_hat - bias_correction
  double bias_correction = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
};

/// Studentised interval from the feasible CLT:
///   se = sigma2_hat * sqrt(2 v delta / (h L_hat)),
///   ci = (sigma2_hat - bias) -/+ z_{(1+level)/2} se.
/// Throws NumericalError("no local occupation") when L_hat <= 0.
InferenceResult confidence_interval(const EstimateResult& est, double delta, double level,
                                    double variance_const, double bias);

/// Local linear version: v = V_x of `kernel`, bias from `curvature` when given.
InferenceResult confidence_interval(const EstimateResult& est, double delta, double level,
                                    std::optional<double> curvature, const KernelSpec& kernel);

/// MSE-optimal bandwidth
///   (4 delta spread^2 / (L_hat [curvature ((K_1^2)^2 - K_1^1 K_1^3)]^2))^{1/5}.
/// Throws NumericalError for zero curvature (flat diffusion).
double optimal_bandwidth(double delta, double local_time_hat, double curvature,
                         const KernelSpec& kernel);

/// (sigma^2)''(x) from the second central difference of local linear
/// estimates at x - 2h, x, x + 2h, each with bandwidth 2h.
double plugin_curvature(const Path& path, double x, double h, const KernelSpec& kernel,
                        double threshold);

struct RateParams {
  double eta = 0.5;
  double phi = 0.3;    // h = delta^phi
  double alpha = 0.0;  // Blumenthal-Getoor index of the IA part; 0 for FA only
};

struct RateCheck {
  std::string name;
  double slack = 0.0;  // > 0 means satisfied
  bool passed = false;
};

struct RateReport {
  std::vector<RateCheck> checks;
  bool passed() const;
  std::string to_string() const;
};

/// FA: eta in (0,1) and 2 phi < 1. IA adds alpha < 1, eta/2 > phi,
/// (1 - alpha eta) - 1/2 + phi/2 > 0 and eta (1 - alpha/2) - 1/2 + phi/2 > 0.
RateReport check_rate_conditions(const RateParams& params, bool ia_present);

}  // namespace tlpvol

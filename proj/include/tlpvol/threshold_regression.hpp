#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tlpvol/jump_diffusion_sim.hpp"
#include "tlpvol/kernel_math.hpp"

namespace tlpvol {

/// Power threshold theta(delta) = scale * delta^eta with eta in (0, 1).
/// scale defaults to 1, the pure power form.
class ThresholdSpec {
 public:
  explicit ThresholdSpec(double eta, double scale = 1.0);
  double eta() const noexcept { return eta_; }
  double scale() const noexcept { return scale_; }
  double value(double delta) const;

 private:
  double eta_;
  double scale_;
};

/// theta(delta); throws ValidationError unless delta lies in (0, 1).
double threshold_value(const ThresholdSpec& spec, double delta);

inline constexpr double kNoThreshold = std::numeric_limits<double>::infinity();

/// Sums over i = 1..n with weights at the left endpoint X_{t_{i-1}} and
/// responses (X_{t_i} - X_{t_{i-1}})^2 / delta, censored to zero when the
/// squared increment exceeds the threshold.
///   s[k] = (1/h) sum K((X_{i-1} - x)/h) (X_{i-1} - x)^k,           k = 0..2p
///   q[k] = (1/h) sum K((X_{i-1} - x)/h) (X_{i-1} - x)^k Y_i,       k = 0..p
struct DesignMoments {
  std::vector<double> s;
  std::vector<double> q;
  double x = 0.0;
  double h = 0.0;
  int p = 0;
  double delta = 0.0;
  std::size_t n_effective = 0;   // observations with K > 0
  std::size_t n_increments = 0;  // n
  std::size_t n_flagged = 0;     // increments censored by the threshold (whole path)

  double local_time_hat() const noexcept { return delta * s[0]; }
  double flagged_fraction() const noexcept {
    return n_increments == 0 ? 0.0 : static_cast<double>(n_flagged) / n_increments;
  }
};

struct EstimateResult {
  double x = 0.0;
  double sigma2_hat = 0.0;
  std::vector<double> beta;  // beta[0] == sigma2_hat
  double local_time_hat = 0.0;
  double h = 0.0;
  std::size_t n_effective = 0;
  double flagged_fraction = 0.0;
};

enum class EstimatorKind { local_linear, nw_threshold, nw_plain, local_poly };

struct Estimator {
  EstimatorKind kind = EstimatorKind::local_linear;
  int p = 1;  // polynomial order for local_poly

  std::string name() const;
  /// Accepts local_linear, nw_threshold, nw_plain, local_poly(p) / local_poly:p.
  static Estimator parse(std::string_view text);
  bool operator==(const Estimator&) const = default;
};

/// Condition-number cap for the (rescaled) local polynomial normal matrix.
inline constexpr double kMaxCondition = 1e12;

/// true = kept as continuous: (X_{t_i} - X_{t_{i-1}})^2 <= threshold.
std::vector<std::uint8_t> classify_increments(const Path& path, double threshold);

double design_moment(const Path& path, double x, double h, const KernelSpec& kernel, int k);
double response_moment(const Path& path, double x, double h, const KernelSpec& kernel,
                       double threshold, int k);

/// One pass over the path. Splits the observations into fixed-size blocks
/// reduced in parallel and combined in block order, so the result does not
/// depend on the thread count.
DesignMoments accumulate_moments(const Path& path, double x, double h, const KernelSpec& kernel,
                                 double threshold, int p);

/// beta = S_n^{-1} Q_n by SVD of the bandwidth-rescaled normal matrix.
/// Throws InsufficientDataError when n_effective < p + 1 or the condition
/// number exceeds kMaxCondition.
std::vector<double> solve_local_poly(const DesignMoments& m);

std::vector<double> local_poly_fit(const Path& path, double x, double h, const KernelSpec& kernel,
                                   double threshold, int p);

/// Local linear threshold estimator in its explicit weighted-average form.
EstimateResult local_linear_sigma2(const Path& path, double x, double h, const KernelSpec& kernel,
                                   double threshold);

/// Nadaraya-Watson; `threshold` absent means no censoring.
double nw_sigma2(const Path& path, double x, double h, const KernelSpec& kernel,
                 std::optional<double> threshold);

/// L_hat(T, x) = (1/h) sum K((X_{t_{i-1}} - x)/h) delta.
double local_time_hat(const Path& path, double x, double h, const KernelSpec& kernel);

/// Dispatches on the estimator kind; nw_plain ignores `threshold`.
EstimateResult estimate(const Path& path, double x, double h, const KernelSpec& kernel,
                        double threshold, const Estimator& estimator);

struct GridEstimate {
  double x = 0.0;
  std::optional<EstimateResult> result;
  std::string error;  // set when result is empty
};

/// Evaluates `estimate` over x points in parallel.
std::vector<GridEstimate> estimate_grid(const Path& path, std::span<const double> xs, double h,
                                        const KernelSpec& kernel, double threshold,
                                        const Estimator& estimator);

namespace serial {

/// Straight single-loop reference for accumulate_moments.
DesignMoments accumulate_moments(const Path& path, double x, double h, const KernelSpec& kernel,
                                 double threshold, int p);

std::vector<GridEstimate> estimate_grid(const Path& path, std::span<const double> xs, double h,
                                        const KernelSpec& kernel, double threshold,
                                        const Estimator& estimator);

}  // namespace serial

}  // namespace tlpvol

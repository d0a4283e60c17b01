#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "tlpvol/random.hpp"

namespace tlpvol {

using ScalarFn = std::function<double(double)>;

/// Law of the finite-activity jump sizes. Normal(mean, sd); sd = 0 gives fixed sizes.
struct JumpSizeLaw {
  double mean = 0.0;
  double sd = 1.0;
};

/// Compound Poisson component with state-dependent intensity lambda(X_{t-}).
struct FaJumpSpec {
  ScalarFn intensity;
  double intensity_bound = 0.0;  // sup of intensity over visited states; used for thinning
  JumpSizeLaw size;
};

enum class IaKind { symmetric_alpha_stable, variance_gamma };

struct VarianceGammaParams {
  double nu = 1.0;     // variance rate of the gamma clock
  double theta = 0.0;  // drift of the subordinated Brownian motion
  double sigma = 1.0;  // volatility of the subordinated Brownian motion
};

/// Infinite-activity Levy component with finite variation.
struct IaJumpSpec {
  IaKind kind = IaKind::symmetric_alpha_stable;
  double alpha = 0.5;  // stability index; must lie in (0, 1) for the stable kind
  double scale = 1.0;  // multiplies every increment; 0 switches the component off
  VarianceGammaParams vg;
};

struct JumpSpec {
  std::optional<FaJumpSpec> fa;
  std::optional<IaJumpSpec> ia;
};

/// dX = mu(X-) dt + sigma(X-) dW + dJ. Truth accessors for sigma^2 and its
/// first two derivatives are optional; validation code needs them.
struct ModelSpec {
  ScalarFn drift;
  ScalarFn diffusion;
  std::optional<ScalarFn> diffusion2_slope;
  std::optional<ScalarFn> diffusion2_curvature;
  JumpSpec jumps;
  double x0 = 0.0;

  double sigma2(double x) const {
    const double s = diffusion(x);
    return s * s;
  }
};

/// Equispaced observations X_{t_0}, ..., X_{t_n} with t_i = i * delta.
struct Path {
  std::size_t n = 0;
  double T = 0.0;
  double delta = 0.0;
  std::vector<double> values;
  // jump_mask[i] != 0 iff a finite-activity jump fell in (t_i, t_{i+1}].
  std::optional<std::vector<std::uint8_t>> jump_mask;
  std::optional<std::vector<double>> fa_jump_times;
  std::uint64_t seed = 0;
};

struct FaJump {
  double time;
  double size;
};

struct SimOptions {
  std::size_t refinement = 10;  // Euler steps per observation interval
};

/// Throws ValidationError for an unusable jump specification.
void validate_jump_spec(const JumpSpec& jumps);

/// Draws the thinned compound Poisson stream one candidate at a time.
/// Candidates arrive at rate intensity_bound; a candidate at time t is kept
/// with probability lambda(X_{t-}) / intensity_bound.
class FaEventStream {
 public:
  FaEventStream(const FaJumpSpec& spec, double horizon, std::uint64_t seed);

  /// Next candidate time, or +inf once the horizon is passed.
  double next_candidate() const noexcept { return next_; }

  /// Resolves the pending candidate against the pre-jump state and advances.
  /// Returns the jump size when accepted.
  std::optional<double> resolve(double state_before);

 private:
  void advance();

  const FaJumpSpec* spec_;
  double horizon_;
  double next_ = 0.0;
  Rng candidates_;
  Rng acceptance_;
  Rng sizes_;
};

/// Draws i.i.d. increments of the infinite-activity component over a step.
class IaIncrementSampler {
 public:
  IaIncrementSampler(const IaJumpSpec& spec, double step, std::uint64_t seed);
  double next();

 private:
  IaJumpSpec spec_;
  double stable_scale_ = 0.0;
  std::gamma_distribution<double> up_;
  std::gamma_distribution<double> down_;
  Rng rng_;
};

std::vector<FaJump> sample_fa_jumps(const FaJumpSpec& spec, const ScalarFn& state_at,
                                    double horizon, std::uint64_t seed);

std::vector<double> sample_ia_increments(const IaJumpSpec& spec, double delta,
                                         std::size_t count, std::uint64_t seed);

/// Euler-Maruyama on n * refinement steps, observed every refinement steps.
/// Deterministic in (model, n, T, seed, options).
Path simulate_path(const ModelSpec& model, std::size_t n, double T, std::uint64_t seed,
                   SimOptions options = {});

/// Per-component seed streams used by simulate_path.
enum class SimStream : std::uint64_t { brownian = 1, fa = 2, ia = 3 };

}  // namespace tlpvol

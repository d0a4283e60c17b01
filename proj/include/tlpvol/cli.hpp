#pragma once

#include <iosfwd>
#include <optional>

#include "tlpvol/jump_diffusion_sim.hpp"
#include "tlpvol/kernel_math.hpp"

namespace tlpvol {

struct BandwidthChoice {
  double h = 0.0;
  double pilot_h = 0.0;
  double local_time_hat = 0.0;  // at the pilot bandwidth
  double curvature = 0.0;       // supplied, or plug-in at the pilot bandwidth
};

/// Default pilot: 1.06 * sd(X) * n^{-1/5}.
double default_pilot_bandwidth(const Path& path);

/// h = auto: optimal_bandwidth fed with L_hat and (sigma^2)'' at a pilot
/// bandwidth. A supplied curvature skips the plug-in step.
BandwidthChoice select_bandwidth(const Path& path, double x, const KernelSpec& kernel,
                                 double threshold, std::optional<double> pilot_h,
                                 std::optional<double> curvature);

/// Subcommands simulate, estimate, mc, bandwidth, check-conditions.
/// Returns 0 on success, 1 usage, 2 data, 3 numerical.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv);

}  // namespace tlpvol

#pragma once

#include <string>

#include "json.hpp"
#include "tlpvol/jump_diffusion_sim.hpp"

namespace tlpvol {

/// Named closed-form coefficients, so sigma^2 and its derivatives are known
/// analytically.
///   drift:     zero | linear_mean_revert   mu(x) = kappa (theta - x)
///   diffusion: constant                    sigma(x) = s
///              sine_bump                   sigma^2(x) = a + b sin(x), a > |b|
///   jumps:     FA with constant intensity lambda and Normal(jump_mean, jump_sd) sizes;
///              IA "stable" (alpha, ia_scale) or "vg" (vg_nu, vg_theta, vg_sigma, ia_scale)
struct ModelRecipe {
  std::string drift = "zero";
  double kappa = 1.0;
  double theta = 0.0;
  std::string diffusion = "constant";
  double s = 1.0;
  double a = 2.0;
  double b = 1.0;
  double x0 = 0.0;
  double lambda = 0.0;
  double jump_mean = 0.0;
  double jump_sd = 1.0;
  std::string ia = "none";  // none | stable | vg
  double alpha = 0.5;
  double ia_scale = 1.0;
  double vg_nu = 1.0;
  double vg_theta = 0.0;
  double vg_sigma = 1.0;
};

/// Throws ValidationError for unknown names or out-of-range parameters.
ModelSpec build_model(const ModelRecipe& recipe);

nlohmann::json recipe_to_json(const ModelRecipe& recipe);

}  // namespace tlpvol

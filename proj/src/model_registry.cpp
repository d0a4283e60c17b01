#include "tlpvol/model_registry.hpp"

#include <cmath>

#include "tlpvol/errors.hpp"

namespace tlpvol {

ModelSpec build_model(const ModelRecipe& r) {
  ModelSpec m;
  m.x0 = r.x0;
  if (!std::isfinite(r.x0)) throw ValidationError("x0 must be finite");

  if (r.drift == "zero") {
    m.drift = [](double) { return 0.0; };
  } else if (r.drift == "linear_mean_revert") {
    if (!(r.kappa >= 0.0)) throw ValidationError("kappa must be >= 0");
    const double kappa = r.kappa, theta = r.theta;
    m.drift = [kappa, theta](double x) { return kappa * (theta - x); };
  } else {
    throw ValidationError("unknown drift '" + r.drift + "'; available: zero linear_mean_revert");
  }

  if (r.diffusion == "constant") {
    if (!(r.s >= 0.0)) throw ValidationError("s must be >= 0");
    const double s = r.s;
    m.diffusion = [s](double) { return s; };
    m.diffusion2_slope = [](double) { return 0.0; };
    m.diffusion2_curvature = [](double) { return 0.0; };
  } else if (r.diffusion == "sine_bump") {
    if (!(r.a > std::abs(r.b))) throw ValidationError("sine_bump needs a > |b| so sigma^2 > 0");
    const double a = r.a, b = r.b;
    m.diffusion = [a, b](double x) { return std::sqrt(a + b * std::sin(x)); };
    m.diffusion2_slope = [b](double x) { return b * std::cos(x); };
    m.diffusion2_curvature = [b](double x) { return -b * std::sin(x); };
  } else {
    throw ValidationError("unknown diffusion '" + r.diffusion + "'; available: constant sine_bump");
  }

  if (r.lambda < 0.0 || !std::isfinite(r.lambda)) throw ValidationError("lambda must be >= 0");
  if (r.lambda > 0.0) {
    FaJumpSpec fa;
    const double lambda = r.lambda;
    fa.intensity = [lambda](double) { return lambda; };
    fa.intensity_bound = lambda;
    fa.size = {r.jump_mean, r.jump_sd};
    m.jumps.fa = fa;
  }

  if (r.ia == "stable") {
    m.jumps.ia = IaJumpSpec{IaKind::symmetric_alpha_stable, r.alpha, r.ia_scale, {}};
  } else if (r.ia == "vg") {
    m.jumps.ia = IaJumpSpec{IaKind::variance_gamma, 0.0, r.ia_scale,
                            {r.vg_nu, r.vg_theta, r.vg_sigma}};
  } else if (r.ia != "none") {
    throw ValidationError("unknown IA kind '" + r.ia + "'; available: none stable vg");
  }
  validate_jump_spec(m.jumps);
  return m;
}

nlohmann::json recipe_to_json(const ModelRecipe& r) {
  nlohmann::json j;
  j["drift"] = r.drift;
  if (r.drift == "linear_mean_revert") j["drift_params"] = {{"kappa", r.kappa}, {"theta", r.theta}};
  j["diffusion"] = r.diffusion;
  if (r.diffusion == "constant")
    j["diffusion_params"] = {{"s", r.s}};
  else
    j["diffusion_params"] = {{"a", r.a}, {"b", r.b}};
  j["x0"] = r.x0;
  j["lambda"] = r.lambda;
  if (r.lambda > 0.0) j["jump_size"] = {{"mean", r.jump_mean}, {"sd", r.jump_sd}};
  j["ia"] = r.ia;
  if (r.ia == "stable") j["ia_params"] = {{"alpha", r.alpha}, {"scale", r.ia_scale}};
  if (r.ia == "vg")
    j["ia_params"] = {{"nu", r.vg_nu}, {"theta", r.vg_theta}, {"sigma", r.vg_sigma}, {"scale", r.ia_scale}};
  return j;
}

}  // namespace tlpvol

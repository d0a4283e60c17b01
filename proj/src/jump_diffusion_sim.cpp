#include "tlpvol/jump_diffusion_sim.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "tlpvol/errors.hpp"

namespace tlpvol {

void validate_jump_spec(const JumpSpec& jumps) {
  if (jumps.fa) {
    const auto& fa = *jumps.fa;
    if (!fa.intensity) throw ValidationError("FA jumps: intensity function missing");
    if (!(fa.intensity_bound >= 0.0) || !std::isfinite(fa.intensity_bound))
      throw ValidationError("FA jumps: intensity_bound must be finite and non-negative");
    if (!(fa.size.sd >= 0.0)) throw ValidationError("FA jumps: size sd must be non-negative");
  }
  if (jumps.ia) {
    const auto& ia = *jumps.ia;
    if (!(ia.scale >= 0.0) || !std::isfinite(ia.scale))
      throw ValidationError("IA jumps: scale must be finite and non-negative");
    if (ia.kind == IaKind::symmetric_alpha_stable && !(ia.alpha > 0.0 && ia.alpha < 1.0)) {
      std::ostringstream os;
      os << "IA jumps: stable index alpha = " << ia.alpha
         << " outside (0, 1); finite variation requires alpha < 1";
      throw ValidationError(os.str());
    }
    if (ia.kind == IaKind::variance_gamma && (!(ia.vg.nu > 0.0) || !(ia.vg.sigma >= 0.0)))
      throw ValidationError("IA jumps: variance gamma needs nu > 0 and sigma >= 0");
  }
}

FaEventStream::FaEventStream(const FaJumpSpec& spec, double horizon, std::uint64_t seed)
    : spec_(&spec),
      horizon_(horizon),
      candidates_(derive_seed(seed, 0)),
      acceptance_(derive_seed(seed, 1)),
      sizes_(derive_seed(seed, 2)) {
  next_ = 0.0;
  advance();
}

void FaEventStream::advance() {
  if (spec_->intensity_bound <= 0.0) {
    next_ = std::numeric_limits<double>::infinity();
    return;
  }
  std::exponential_distribution<double> gap(spec_->intensity_bound);
  next_ += gap(candidates_);
  if (next_ > horizon_) next_ = std::numeric_limits<double>::infinity();
}

std::optional<double> FaEventStream::resolve(double state_before) {
  const double lambda = spec_->intensity(state_before);
  if (!(lambda >= 0.0)) {
    std::ostringstream os;
    os << "FA jumps: intensity " << lambda << " at state " << state_before << " is not >= 0";
    throw ValidationError(os.str());
  }
  if (lambda > spec_->intensity_bound * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "FA jumps: intensity " << lambda << " at state " << state_before
       << " exceeds intensity_bound " << spec_->intensity_bound << "; thinning is invalid";
    throw ValidationError(os.str());
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const bool accept = unif(acceptance_) * spec_->intensity_bound < lambda;
  advance();
  if (!accept) return std::nullopt;
  if (spec_->size.sd == 0.0) return spec_->size.mean;
  std::normal_distribution<double> law(spec_->size.mean, spec_->size.sd);
  return law(sizes_);
}

IaIncrementSampler::IaIncrementSampler(const IaJumpSpec& spec, double step, std::uint64_t seed)
    : spec_(spec), rng_(seed) {
  if (spec_.kind == IaKind::symmetric_alpha_stable) {
    stable_scale_ = spec_.scale * std::pow(step, 1.0 / spec_.alpha);
  } else {
    // VG increment over `step` as the difference of two independent gammas.
    const auto& vg = spec_.vg;
    const double root = std::sqrt(vg.theta * vg.theta + 2.0 * vg.sigma * vg.sigma / vg.nu);
    const double mu_up = 0.5 * root + 0.5 * vg.theta;
    const double mu_down = 0.5 * root - 0.5 * vg.theta;
    const double shape = step / vg.nu;
    up_ = std::gamma_distribution<double>(shape, mu_up * vg.nu);
    down_ = std::gamma_distribution<double>(shape, mu_down * vg.nu);
  }
}

double IaIncrementSampler::next() {
  if (spec_.scale == 0.0) return 0.0;
  if (spec_.kind == IaKind::symmetric_alpha_stable)
    return stable_scale_ * standard_symmetric_stable(rng_, spec_.alpha);
  const double up = up_(rng_);
  const double down = down_(rng_);
  return spec_.scale * (up - down);
}

std::vector<FaJump> sample_fa_jumps(const FaJumpSpec& spec, const ScalarFn& state_at,
                                    double horizon, std::uint64_t seed) {
  validate_jump_spec(JumpSpec{spec, std::nullopt});
  std::vector<FaJump> out;
  FaEventStream stream(spec, horizon, seed);
  while (std::isfinite(stream.next_candidate())) {
    const double t = stream.next_candidate();
    if (auto size = stream.resolve(state_at(t))) out.push_back({t, *size});
  }
  return out;
}

std::vector<double> sample_ia_increments(const IaJumpSpec& spec, double delta,
                                         std::size_t count, std::uint64_t seed) {
  validate_jump_spec(JumpSpec{std::nullopt, spec});
  if (!(delta > 0.0)) throw ValidationError("IA increments: delta must be positive");
  IaIncrementSampler sampler(spec, delta, seed);
  std::vector<double> out(count);
  for (auto& v : out) v = sampler.next();
  return out;
}

Path simulate_path(const ModelSpec& model, std::size_t n, double T, std::uint64_t seed,
                   SimOptions options) {
  if (n < 2) throw ValidationError("simulate_path: n must be at least 2");
  if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("simulate_path: T must be positive");
  if (options.refinement < 1) throw ValidationError("simulate_path: refinement must be >= 1");
  if (!model.drift || !model.diffusion)
    throw ValidationError("simulate_path: drift and diffusion are required");
  validate_jump_spec(model.jumps);

  const std::size_t R = options.refinement;
  const std::size_t steps = n * R;
  const double fine_dt = T / static_cast<double>(steps);

  Path path;
  path.n = n;
  path.T = T;
  path.delta = T / static_cast<double>(n);
  path.seed = seed;
  path.values.resize(n + 1);
  path.values[0] = model.x0;

  Rng brownian(derive_seed(seed, static_cast<std::uint64_t>(SimStream::brownian)));
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::optional<FaEventStream> fa;
  if (model.jumps.fa) {
    fa.emplace(*model.jumps.fa, T, derive_seed(seed, static_cast<std::uint64_t>(SimStream::fa)));
    path.jump_mask.emplace(n, 0);
    path.fa_jump_times.emplace();
  }
  std::optional<IaIncrementSampler> ia;
  if (model.jumps.ia)
    ia.emplace(*model.jumps.ia, fine_dt,
               derive_seed(seed, static_cast<std::uint64_t>(SimStream::ia)));

  const auto euler = [&](double x, double dt) {
    return x + model.drift(x) * dt + model.diffusion(x) * std::sqrt(dt) * gauss(brownian);
  };

  double x = model.x0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t_end = T * static_cast<double>(k + 1) / static_cast<double>(steps);
    double t = T * static_cast<double>(k) / static_cast<double>(steps);
    if (fa) {
      while (fa->next_candidate() <= t_end) {
        const double tau = fa->next_candidate();
        if (tau > t) {
          x = euler(x, tau - t);
          t = tau;
        }
        if (auto size = fa->resolve(x)) {
          x += *size;
          path.fa_jump_times->push_back(tau);
          (*path.jump_mask)[k / R] = 1;
        }
      }
    }
    if (t_end > t) x = euler(x, t_end - t);
    if (ia) x += ia->next();
    if (!std::isfinite(x)) {
      std::ostringstream os;
      os << "simulate_path: non-finite state at fine step " << k << " (observation interval "
         << k / R << ")";
      throw NumericalError(os.str());
    }
    if ((k + 1) % R == 0) path.values[(k + 1) / R] = x;
  }
  return path;
}

}  // namespace tlpvol

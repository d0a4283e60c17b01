#include "tlpvol/random.hpp"

#include <cmath>
#include <numbers>

namespace tlpvol {
namespace {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

double standard_symmetric_stable(Rng& rng, double alpha) {
  constexpr double half_pi = 0.5 * std::numbers::pi;
  std::uniform_real_distribution<double> angle(-half_pi, half_pi);
  std::exponential_distribution<double> expo(1.0);
  double v = angle(rng);
  while (v == -half_pi) v = angle(rng);
  double w = expo(rng);
  while (w == 0.0) w = expo(rng);
  if (alpha == 1.0) return std::tan(v);
  return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
}

}  // namespace tlpvol

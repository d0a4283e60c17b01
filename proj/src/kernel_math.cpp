#include "tlpvol/kernel_math.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tlpvol/errors.hpp"
#include "tlpvol/quadrature.hpp"

namespace tlpvol {

KernelSpec KernelSpec::one_sided_epanechnikov() {
  return KernelSpec("one_sided_epanechnikov", Kind::epanechnikov, 1.0);
}

KernelSpec KernelSpec::one_sided_uniform() {
  return KernelSpec("one_sided_uniform", Kind::uniform, 1.0);
}

KernelSpec KernelSpec::tabulated(std::string name, std::vector<double> u, std::vector<double> k,
                                 double mass_tol) {
  if (u.size() != k.size()) throw ValidationError("tabulated kernel: u and k differ in length");
  if (u.size() < 2) throw ValidationError("tabulated kernel: need at least two knots");
  if (u.front() != 0.0) throw ValidationError("tabulated kernel: first knot must be u = 0");
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i]) || !std::isfinite(k[i]))
      throw ValidationError("tabulated kernel: non-finite knot at index " + std::to_string(i));
    if (k[i] < 0.0)
      throw ValidationError("tabulated kernel: negative weight at index " + std::to_string(i));
    if (i > 0 && !(u[i] > u[i - 1]))
      throw ValidationError("tabulated kernel: u not strictly increasing at index " +
                            std::to_string(i));
  }
  KernelSpec spec(std::move(name), Kind::tabulated, u.back());
  spec.knots_u_ = std::move(u);
  spec.knots_k_ = std::move(k);

  const double mass = kernel_moment_quadrature(spec, 1, 0);
  if (std::abs(mass - 1.0) > mass_tol) {
    std::ostringstream os;
    os << "tabulated kernel '" << spec.name_ << "' integrates to " << mass
       << ", not 1 (tolerance " << mass_tol << ")";
    throw ValidationError(os.str());
  }
  return spec;
}

double KernelSpec::interpolate(double u) const noexcept {
  const auto it = std::upper_bound(knots_u_.begin(), knots_u_.end(), u);
  if (it == knots_u_.end()) return knots_k_.back();
  const auto hi = static_cast<std::size_t>(it - knots_u_.begin());
  const std::size_t lo = hi - 1;
  const double w = (u - knots_u_[lo]) / (knots_u_[hi] - knots_u_[lo]);
  return knots_k_[lo] + w * (knots_k_[hi] - knots_k_[lo]);
}

std::vector<double> KernelSpec::breakpoints() const {
  if (kind_ == Kind::tabulated) return knots_u_;
  return {0.0, support_};
}

std::optional<double> KernelSpec::closed_form_moment(int i, int j) const {
  if (i < 1 || j < 0) return std::nullopt;
  switch (kind_) {
    case Kind::uniform:
      return 1.0 / (j + 1);
    case Kind::epanechnikov: {
      // (3/2)^i * int_0^1 u^j (1 - u^2)^i du, expanded binomially.
      double sum = 0.0;
      double binom = 1.0;
      for (int m = 0; m <= i; ++m) {
        sum += ((m % 2 == 0) ? binom : -binom) / (j + 2 * m + 1);
        binom = binom * (i - m) / (m + 1);
      }
      return std::pow(1.5, i) * sum;
    }
    case Kind::tabulated:
      return std::nullopt;
  }
  return std::nullopt;
}

std::vector<std::string> builtin_kernel_names() {
  return {"one_sided_epanechnikov", "one_sided_uniform"};
}

KernelSpec builtin_kernel(std::string_view name) {
  if (name == "one_sided_epanechnikov") return KernelSpec::one_sided_epanechnikov();
  if (name == "one_sided_uniform") return KernelSpec::one_sided_uniform();
  std::string msg = "unknown kernel '" + std::string(name) + "'; available:";
  for (const auto& n : builtin_kernel_names()) msg += " " + n;
  throw ValidationError(msg);
}

double kernel_moment_quadrature(const KernelSpec& kernel, int i, int j) {
  if (i < 1 || j < 0) throw ValidationError("kernel_moment needs i >= 1 and j >= 0");
  const auto integrand = [&kernel, i, j](double u) {
    return std::pow(u, j) * std::pow(kernel(u), i);
  };
  const auto bp = kernel.breakpoints();
  return integrate_adaptive(integrand, bp).value;
}

double kernel_moment(const KernelSpec& kernel, int i, int j) {
  if (i < 1 || j < 0) throw ValidationError("kernel_moment needs i >= 1 and j >= 0");
  if (auto closed = kernel.closed_form_moment(i, j)) return *closed;
  return kernel_moment_quadrature(kernel, i, j);
}

KernelSpec read_kernel_csv(std::istream& in, std::string name) {
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::vector<double> u, k;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "u,k") throw DataError("kernel CSV: expected header 'u,k' on line " +
                                         std::to_string(lineno));
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw DataError("kernel CSV: missing comma on line " + std::to_string(lineno));
    try {
      std::size_t used = 0;
      const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
      u.push_back(std::stod(a, &used));
      if (used != a.size()) throw std::invalid_argument(a);
      k.push_back(std::stod(b, &used));
      if (used != b.size()) throw std::invalid_argument(b);
    } catch (const std::exception&) {
      throw DataError("kernel CSV: cannot parse line " + std::to_string(lineno));
    }
  }
  if (!header) throw DataError("kernel CSV: empty file");
  try {
    return KernelSpec::tabulated(std::move(name), std::move(u), std::move(k));
  } catch (const ValidationError& e) {
    throw DataError(e.what());
  }
}

KernelSpec load_kernel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open kernel file " + path);
  return read_kernel_csv(in, path);
}

KernelSpec resolve_kernel(std::string_view name_or_path) {
  for (const auto& n : builtin_kernel_names())
    if (n == name_or_path) return builtin_kernel(n);
  std::ifstream probe{std::string(name_or_path)};
  if (probe) return load_kernel_file(std::string(name_or_path));
  return builtin_kernel(name_or_path);  // throws with the list of names
}

}  // namespace tlpvol

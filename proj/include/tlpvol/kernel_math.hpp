#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tlpvol {

/// One-sided kernel K: R+ -> R+ with compact support [0, support_upper].
///
/// Built-ins have closed-form moments; tabulated kernels interpolate linearly
/// between (u, K(u)) knots and fall back to quadrature for moments. Instances
/// are immutable once constructed.
class KernelSpec {
 public:
  enum class Kind { epanechnikov, uniform, tabulated };

  static KernelSpec one_sided_epanechnikov();
  static KernelSpec one_sided_uniform();

  /// Knots must start at u = 0, be strictly increasing, and carry
  /// non-negative weights. The resulting density must integrate to one
  /// within `mass_tol`; it is never renormalised silently.
  static KernelSpec tabulated(std::string name, std::vector<double> u, std::vector<double> k,
                              double mass_tol = 1e-6);

  const std::string& name() const noexcept { return name_; }
  Kind kind() const noexcept { return kind_; }
  double support_upper() const noexcept { return support_; }

  double operator()(double u) const noexcept {
    if (u < 0.0 || u > support_) return 0.0;
    switch (kind_) {
      case Kind::epanechnikov:
        return 1.5 * (1.0 - u * u);
      case Kind::uniform:
        return 1.0;
      case Kind::tabulated:
        return interpolate(u);
    }
    return 0.0;
  }
  double eval(double u) const noexcept { return (*this)(u); }

  /// K_i^j in closed form when the kernel has one.
  std::optional<double> closed_form_moment(int i, int j) const;

  /// Points where K (or a derivative) may be non-smooth; quadrature splits there.
  std::vector<double> breakpoints() const;

 private:
  KernelSpec(std::string name, Kind kind, double support)
      : name_(std::move(name)), kind_(kind), support_(support) {}
  double interpolate(double u) const noexcept;

  std::string name_;
  Kind kind_;
  double support_;
  std::vector<double> knots_u_;
  std::vector<double> knots_k_;
};

std::vector<std::string> builtin_kernel_names();

/// Throws ValidationError listing the available names for an unknown one.
KernelSpec builtin_kernel(std::string_view name);

/// K_i^j = int_0^inf u^j K(u)^i du. Closed form when available, otherwise
/// adaptive quadrature at abs tol 1e-12.
double kernel_moment(const KernelSpec& kernel, int i, int j);

/// Always integrates numerically; the independent route for checking closed forms.
double kernel_moment_quadrature(const KernelSpec& kernel, int i, int j);

/// Reads a custom kernel from CSV with header `u,k`.
KernelSpec read_kernel_csv(std::istream& in, std::string name);
KernelSpec load_kernel_file(const std::string& path);

/// Built-in name, or otherwise a path to a `u,k` kernel file.
KernelSpec resolve_kernel(std::string_view name_or_path);

}  // namespace tlpvol

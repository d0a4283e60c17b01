#include <cmath>
#include <sstream>
#include <string>

#include "doctest.h"
#include "tlpvol/errors.hpp"
#include "tlpvol/kernel_math.hpp"
#include "tlpvol/normal.hpp"
#include "tlpvol/quadrature.hpp"

using namespace tlpvol;

TEST_SUITE("kernel_math") {

TEST_CASE("builtin kernels evaluate as documented") {
  const auto uni = builtin_kernel("one_sided_uniform");
  const auto epa = builtin_kernel("one_sided_epanechnikov");
  CHECK(uni(0.5) == 1.0);
  CHECK(epa(0.0) == 1.5);
  CHECK(epa(2.0) == 0.0);
  CHECK(epa(-0.1) == 0.0);
  CHECK(uni(-1e-12) == 0.0);
  CHECK(uni(1.0 + 1e-12) == 0.0);
  CHECK(std::abs(epa(0.5) - 1.125) < 1e-15);
}

TEST_CASE("unknown kernel name lists the available ones") {
  try {
    builtin_kernel("gaussian");
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("one_sided_epanechnikov") != std::string::npos);
    CHECK(msg.find("one_sided_uniform") != std::string::npos);
  }
}

TEST_CASE("moment examples") {
  const auto uni = KernelSpec::one_sided_uniform();
  const auto epa = KernelSpec::one_sided_epanechnikov();
  CHECK(std::abs(kernel_moment(uni, 1, 0) - 1.0) < 1e-15);
  CHECK(std::abs(kernel_moment(epa, 1, 1) - 0.375) < 1e-15);
  CHECK(std::abs(kernel_moment(epa, 2, 0) - 1.2) < 1e-14);
  CHECK(std::abs(kernel_moment(epa, 1, 2) - 0.2) < 1e-15);
  CHECK(std::abs(kernel_moment(epa, 1, 3) - 0.125) < 1e-15);
  CHECK(std::abs(kernel_moment(epa, 2, 1) - 0.375) < 1e-15);
  CHECK(std::abs(kernel_moment(epa, 2, 2) - 6.0 / 35.0) < 1e-15);
}

TEST_CASE("closed form agrees with quadrature") {
  for (const auto& name : builtin_kernel_names()) {
    const auto k = builtin_kernel(name);
    for (int i = 1; i <= 3; ++i)
      for (int j = 0; j <= 7; ++j) {
        CAPTURE(name);
        CAPTURE(i);
        CAPTURE(j);
        CHECK(std::abs(*k.closed_form_moment(i, j) - kernel_moment_quadrature(k, i, j)) < 1e-10);
      }
  }
}

TEST_CASE("unit mass and positive spread") {
  for (const auto& name : builtin_kernel_names()) {
    const auto k = builtin_kernel(name);
    CHECK(std::abs(kernel_moment(k, 1, 0) - 1.0) < 1e-10);
    CHECK(std::abs(kernel_moment_quadrature(k, 1, 0) - 1.0) < 1e-10);
    CHECK(kernel_moment(k, 1, 2) - std::pow(kernel_moment(k, 1, 1), 2) > 0.0);
  }
}

TEST_CASE("invalid moment indices") {
  const auto k = KernelSpec::one_sided_uniform();
  CHECK_THROWS_AS(kernel_moment(k, 0, 1), ValidationError);
  CHECK_THROWS_AS(kernel_moment(k, 1, -1), ValidationError);
}

TEST_CASE("tabulated kernel interpolates and integrates by quadrature") {
  // Triangle 2(1 - u) on [0, 1]: unit mass, K_1^1 = 1/3, K_2^0 = 4/3.
  const auto tri = KernelSpec::tabulated("triangle", {0.0, 1.0}, {2.0, 0.0});
  CHECK(tri(0.25) == doctest::Approx(1.5));
  CHECK(tri(1.5) == 0.0);
  CHECK_FALSE(tri.closed_form_moment(1, 0).has_value());
  CHECK(std::abs(kernel_moment(tri, 1, 1) - 1.0 / 3.0) < 1e-12);
  CHECK(std::abs(kernel_moment(tri, 2, 0) - 4.0 / 3.0) < 1e-12);
}

TEST_CASE("tabulated kernel validation") {
  CHECK_THROWS_AS(KernelSpec::tabulated("bad", {0.0, 1.0}, {1.0, 1.0, 1.0}), ValidationError);
  CHECK_THROWS_AS(KernelSpec::tabulated("bad", {0.1, 1.0}, {1.0, 1.0}), ValidationError);
  CHECK_THROWS_AS(KernelSpec::tabulated("bad", {0.0, 0.5, 0.5, 1.0}, {1, 1, 1, 1}), ValidationError);
  CHECK_THROWS_AS(KernelSpec::tabulated("bad", {0.0, 1.0}, {-1.0, 3.0}), ValidationError);
  try {
    KernelSpec::tabulated("half", {0.0, 1.0}, {0.5, 0.5});
    FAIL("expected a mass error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("integrates to") != std::string::npos);
  }
}

TEST_CASE("kernel CSV") {
  std::istringstream good("# triangle\nu,k\n0,2\n0.5,1\n1,0\n");
  const auto k = read_kernel_csv(good, "tri");
  CHECK(k.name() == "tri");
  CHECK(k.support_upper() == 1.0);
  CHECK(std::abs(kernel_moment(k, 1, 0) - 1.0) < 1e-12);

  std::istringstream header("x,y\n0,1\n");
  CHECK_THROWS_AS(read_kernel_csv(header, "h"), DataError);
  std::istringstream garbage("u,k\n0,2\n0.5,abc\n");
  try {
    read_kernel_csv(garbage, "g");
    FAIL("expected a parse error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::istringstream unnormalised("u,k\n0,1\n1,1\n2,1\n");
  CHECK_THROWS_AS(read_kernel_csv(unnormalised, "u"), DataError);
}

TEST_CASE("resolve_kernel falls back to a file and then to the name list") {
  CHECK(resolve_kernel("one_sided_uniform").kind() == KernelSpec::Kind::uniform);
  CHECK_THROWS_AS(resolve_kernel("/nonexistent/kernel.csv"), ValidationError);
}

}  // TEST_SUITE

TEST_SUITE("numerics") {

TEST_CASE("adaptive quadrature") {
  const auto r = integrate_adaptive([](double x) { return std::sin(x); }, 0.0, M_PI);
  CHECK(std::abs(r.value - 2.0) < 1e-13);
  CHECK(r.abs_error <= 1e-12);

  const double bp[] = {0.0, 0.3, 1.0};
  const auto kink = integrate_adaptive([](double x) { return std::abs(x - 0.3); }, bp);
  CHECK(std::abs(kink.value - (0.045 + 0.245)) < 1e-14);
}

TEST_CASE("quadrature reports the achieved tolerance when the budget runs out") {
  try {
    integrate_adaptive([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, {1e-14, 3});
    FAIL("expected non-convergence");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("error") != std::string::npos);
  }
}

TEST_CASE("normal quantile") {
  CHECK(std::abs(normal_quantile(0.975) - 1.959963984540054) < 1e-9);
  CHECK(std::abs(normal_quantile(0.5)) < 1e-15);
  CHECK(std::abs(normal_quantile(0.995) - 2.5758293035489004) < 1e-9);
  CHECK(std::abs(normal_quantile(1e-10) + 6.361340902404056) < 1e-8);
  for (double p = 1e-6; p < 1.0; p += 0.0137)
    CHECK(std::abs(normal_cdf(normal_quantile(p)) - p) < 1e-12 * std::max(1.0, p / (1 - p)));
  CHECK_THROWS_AS(normal_quantile(0.0), ValidationError);
  CHECK_THROWS_AS(normal_quantile(1.0), ValidationError);
}

TEST_CASE("normal cdf") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(std::abs(normal_cdf(1.0) - 0.8413447460685429) < 1e-15);
  CHECK(std::abs(normal_cdf(-3.0) - 0.0013498980316300946) < 1e-17);
}

}  // TEST_SUITE

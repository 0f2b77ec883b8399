#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fraclab/kernels.hpp"

using namespace fraclab;

TEST_CASE("constant kernel validates with equal bounds") {
  const Kernel k = builtin_kernel("constant", {{"c", 1.0}});
  const auto v = validate_kernel(k, 4000);
  CHECK(v.passed);
  CHECK(v.min_value == 1.0);
  CHECK(v.max_value == 1.0);
  CHECK(k.lambda() == 1.0);
  CHECK(k.Lambda() == 1.0);
  CHECK(k.is_constant());
}

TEST_CASE("product of sines stays in its declared range") {
  const Kernel k([](double x, double y) { return 1.5 + 0.5 * std::sin(x) * std::sin(y); }, 1.0, 2.0, "sines");
  CHECK(validate_kernel(k, 4000).passed);
}

TEST_CASE("asymmetric kernel is rejected at the worst pair") {
  const Kernel k([](double x, double) { return 2.0 + x; }, 0.5, 10.0, "skew");
  const auto v = validate_kernel(k, 4000, 1.0);
  CHECK_FALSE(v.passed);
  CHECK(v.max_asymmetry == doctest::Approx(2.0));
  CHECK(k(1.0, 0.0) != k(0.0, 1.0));
}

TEST_CASE("bound violation is rejected") {
  const Kernel k([](double x, double y) { return 1.0 + x * x + y * y; }, 1.0, 2.0, "wide");
  CHECK_FALSE(validate_kernel(k, 4000).passed);
}

TEST_CASE("oscillation") {
  SUBCASE("constants are invariant") {
    const Kernel k = oscillate(constant_kernel(0.7), 13);
    CHECK(k(0.123, -0.9) == 0.7);
    CHECK(k.is_constant());
  }
  SUBCASE("separable cosine at n = 2") {
    const Kernel k = oscillate(separable_cosine_kernel(1.0, 2.0), 2);
    CHECK(k(0.25, 0.25) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(k.frequency() == 2);
  }
  SUBCASE("bounds are preserved for n in 1..64") {
    for (const auto& name : builtin_kernel_names()) {
      const Kernel base = builtin_kernel(name);
      for (int n = 1; n <= 64; ++n) {
        const Kernel k = oscillate(base, n);
        CHECK(k.lambda() == base.lambda());
        CHECK(k.Lambda() == base.Lambda());
        CHECK(validate_kernel(k, 2000).passed);
      }
    }
  }
  CHECK_THROWS_AS(oscillate(constant_kernel(1.0), 0), ValidationError);
}

TEST_CASE("builtin families") {
  const Kernel cb = builtin_kernel("checkerboard", {{"lambda", 1.0}, {"Lambda", 2.0}});
  CHECK(cb(0.1, 0.1) == 2.0);
  CHECK(cb(0.1, 0.6) == 1.0);
  const Kernel sc = builtin_kernel("separable-cosine");
  double worst = 0.0;
  for (double x = -2.0; x <= 2.0; x += 0.037)
    for (double y = -2.0; y <= 2.0; y += 0.041) worst = std::max(worst, std::abs(sc(x, y) - sc(y, x)));
  CHECK(worst <= 1e-15);
  const Kernel rb = builtin_kernel("radial-bump");
  CHECK(rb(0.3, 0.3) == doctest::Approx(rb.lambda()));
  CHECK(periodic_bump(0.5) == doctest::Approx(1.0));
  CHECK(periodic_bump(0.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(builtin_kernel("no-such-kernel"), ValidationError);
  CHECK_THROWS_AS(builtin_kernel("checkerboard", {{"lambda", 2.0}, {"Lambda", 1.0}}), ValidationError);
}

TEST_CASE("kernel sequence members") {
  KernelSequence seq(checkerboard_kernel(), {1, 2, 4});
  CHECK(seq.member(4)(0.1 / 4, 0.1 / 4) == 2.0);
  CHECK(seq.indices().size() == 3);
}

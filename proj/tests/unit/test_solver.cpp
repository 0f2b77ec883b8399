#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fraclab/solver.hpp"

using namespace fraclab;
using Eigen::VectorXd;

namespace {

constexpr double pi = std::numbers::pi;

struct Setup {
  std::shared_ptr<const PairQuadrature> quad;
  std::shared_ptr<const NonlocalOperator> op;
  DualVector load(const std::function<double(double)>& f) const {
    return load_from_density(quad->grid(), quad->domain_rule(), f);
  }
};

Setup make(int M, double s, double p, Kernel k = constant_kernel(1.0), int depth = 8) {
  Setup out;
  out.quad = pair_quadrature(build_grid(1.0, 4.0, M), FracParams{s, p}, depth);
  out.op = std::make_shared<const NonlocalOperator>(out.quad, std::move(k));
  return out;
}

double hat_at(const Grid& g, int i, double x) {
  return std::max(0.0, 1.0 - std::abs(x - g.interior_node(i)) / g.spacing());
}

}  // namespace

TEST_CASE("zero load gives the zero minimizer") {
  for (double p : {2.0, 3.0, 1.5}) {
    auto st = make(31, 0.5, p);
    const auto r = solve({st.op, DualVector{VectorXd::Zero(31)}});
    CHECK(r.u.values().norm() == 0.0);
    CHECK(r.energy == 0.0);
    CHECK(r.apriori_bound == 0.0);
  }
}

TEST_CASE("sqrt(1-x^2) solves the unit-kernel problem with load pi") {
  auto st = make(256, 0.5, 2.0);
  const auto r = solve({st.op, st.load([](double) { return pi; })});
  const Grid& g = st.quad->grid();
  double l2 = 0.0, mx = 0.0;
  for (int i = 0; i < g.interior_count(); ++i) {
    const double x = g.interior_node(i);
    const double e = r.u.values()[i] - std::sqrt(1.0 - x * x);
    mx = std::max(mx, std::abs(e));
  }
  const auto& d = st.quad->domain_rule();
  for (std::size_t e = 0; e < d.size(); ++e) l2 += d.w[e] * std::pow(r.u(d.x[e]) - std::sqrt(1.0 - d.x[e] * d.x[e]), 2);
  CHECK(std::sqrt(l2) <= 1e-2);
  CHECK(mx <= 5e-2);
  CHECK(r.residual <= r.tol);
  // With a = 1 both bounds hold with equality up to rounding.
  CHECK(r.seminorm <= r.apriori_bound * (1.0 + 1e-8));
  CHECK(r.flux_norm <= r.flux_bound * (1.0 + 1e-8));
}

TEST_CASE("p = 2 solutions scale with the load") {
  auto st = make(63, 0.5, 2.0, checkerboard_kernel());
  const auto a = solve({st.op, st.load([](double) { return pi; })});
  const auto b = solve({st.op, st.load([](double) { return 2 * pi; })});
  CHECK((b.u.values() - 2.0 * a.u.values()).norm() <= 1e-9);
}

TEST_CASE("descent path agrees with the direct solve at p = 2") {
  auto st = make(63, 0.4, 2.0, separable_cosine_kernel());
  const auto f = st.load([](double x) { return 1.0 + x; });
  const auto direct = solve({st.op, f});
  SolverOptions opt;
  opt.force_iterative = true;
  const auto iter = solve({st.op, f}, opt);
  CHECK((direct.u.values() - iter.u.values()).norm() <= 10 * direct.tol);
}

TEST_CASE("nonlinear solves reach their tolerance") {
  for (auto [s, p] : {std::pair{0.3, 1.5}, std::pair{0.7, 3.0}, std::pair{0.5, 4.0}}) {
    CAPTURE(p);
    auto st = make(63, s, p, radial_bump_kernel());
    const auto r = solve({st.op, st.load([](double x) { return std::cos(pi * x / 2); })});
    CHECK(r.residual <= r.effective_tol);
    CHECK(r.effective_tol >= r.tol);
    CHECK(r.method == "newton-armijo");
    CHECK(r.seminorm <= r.apriori_bound);
    CHECK(r.flux_norm <= r.flux_bound);
    for (std::size_t k = 1; k < r.energy_history.size(); ++k) CHECK(r.energy_history[k] <= r.energy_history[k - 1] + 1e-12);
  }
}

TEST_CASE("iteration budget exhaustion reports the best iterate") {
  auto st = make(63, 0.5, 3.0);
  SolverOptions opt;
  opt.max_iter = 1;
  opt.tol = 1e-14;
  opt.compute_bounds = false;
  try {
    (void)solve({st.op, st.load([](double) { return 1.0; })}, opt);
    FAIL("expected NonConvergence");
  } catch (const NonConvergence& e) {
    CHECK(e.best_iterate().size() == 63);
    CHECK(e.residual() > 0.0);
  }
  SolverOptions bad;
  bad.max_iter = 0;
  CHECK_THROWS_AS((void)solve({st.op, st.load([](double) { return 1.0; })}, bad), ValidationError);
}

TEST_CASE("minimizer verification") {
  auto st = make(63, 0.5, 3.0, checkerboard_kernel());
  const auto f = st.load([](double) { return 1.0; });
  const auto r = solve({st.op, f});
  CHECK(verify_minimizer(r.u.values(), *st.op, f, 50, r.tol).passed);
  VectorXd bumped = r.u.values();
  bumped[31] += 0.1;
  CHECK_FALSE(verify_minimizer(bumped, *st.op, f, 50, r.tol).passed);
  CHECK(verify_minimizer(VectorXd::Zero(63), *st.op, DualVector{VectorXd::Zero(63)}, 20, r.tol).passed);
}

TEST_CASE("uniqueness from random starts") {
  SUBCASE("p = 2") {
    auto st = make(63, 0.5, 2.0);
    const auto rep = uniqueness_probe({st.op, st.load([](double) { return pi; })}, 4);
    CHECK(rep.max_distance <= 1e-8);
  }
  SUBCASE("p = 3") {
    auto st = make(63, 0.5, 3.0);
    const auto rep = uniqueness_probe({st.op, st.load([](double) { return pi; })}, 4);
    CHECK(rep.max_distance <= 1e-4);
  }
  SUBCASE("zero load") {
    auto st = make(31, 0.5, 1.5);
    const auto rep = uniqueness_probe({st.op, DualVector{VectorXd::Zero(31)}}, 3);
    CHECK(rep.max_distance <= 1e-6);
  }
}

TEST_CASE("Simon inequality") {
  CHECK(simon_constant(2.0) == 1.0);
  CHECK(simon_constant(4.0) == 0.25);
  CHECK(simon_constant(1.5) == 0.25);
  for (double p : {1.5, 2.0, 3.0}) {
    const auto v = simon_gap(0.7, 0.7, p);
    CHECK(v.lhs == 0.0);
    CHECK(v.rhs == 0.0);
  }
  const auto two = simon_gap(1.3, -0.4, 2.0);
  CHECK(two.lhs == doctest::Approx(1.7 * 1.7));
  CHECK(two.rhs == doctest::Approx(1.7 * 1.7));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (double p : {1.5, 3.0, 4.0}) {
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 100000; ++k) {
      const auto v = simon_gap(u(rng), u(rng), p);
      worst = std::min(worst, v.lhs - v.rhs);
    }
    CHECK(worst >= 0.0);
  }
}

TEST_CASE("a-priori bounds") {
  auto st = make(63, 0.5, 2.0);
  const auto zero = check_bounds(VectorXd::Zero(63), *st.op, 0.0);
  CHECK(zero.passed);
  const auto f = st.load([](double) { return pi; });
  const auto r = solve({st.op, f});
  const auto b = check_bounds(r.u.values(), *st.op, r.load_dual_norm);
  CHECK(b.passed);
  CHECK(b.seminorm <= b.apriori_bound * (1.0 + 1e-8));
  // With a = 1 both bounds are attained: [u] = (2||f||)^{1/(p-1)} and ||xi|| = 2||f||.
  CHECK(b.seminorm == doctest::Approx(b.apriori_bound).epsilon(1e-8));
  CHECK(b.flux_norm_pow == doctest::Approx(b.flux_bound_pow).epsilon(1e-8));
}

TEST_CASE("dual norm") {
  auto st = make(63, 0.5, 2.0);
  CHECK(dual_norm(DualVector{VectorXd::Zero(63)}, st.quad).value == 0.0);
  const auto f = st.load([](double) { return pi; });
  const double a = dual_norm(f, st.quad).value;
  const double b = dual_norm(DualVector{2.0 * f.values}, st.quad).value;
  CHECK(b == doctest::Approx(2.0 * a).epsilon(1e-9));
  // Random normalized candidates only bound it from below: half sine series, half
  // boundary-power profiles (1-x^2)^g (1 + c1 x + c2 x^2) with random g in [1/4, 1].
  NonlocalOperator one(st.quad, constant_kernel(1.0));
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ug(0.25, 1.0), uc(-0.5, 0.5);
  double best = 0.0;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    VectorXd v;
    if (k % 2 == 0) {
      v = random_smooth(st.quad->grid(), 1000 + k);
    } else {
      const double g = ug(rng), c1 = uc(rng), c2 = uc(rng);
      v = DiscreteFunction::interpolate(st.quad->grid_ptr(), [=](double x) {
            return std::pow(1.0 - x * x, g) * (1.0 + c1 * x + c2 * x * x);
          }).values();
    }
    const double sv = std::pow(one.seminorm_pow(v), 0.5);
    best = std::max(best, std::abs(f(v)) / sv);
  }
  CHECK(best <= a * (1.0 + 1e-10));
  CHECK(best >= 0.95 * a);
}

TEST_CASE("dual norm p-homogeneity") {
  auto st = make(63, 0.5, 3.0);
  const auto f = st.load([](double x) { return 1.0 - x * x; });
  const double a = dual_norm(f, st.quad).value;
  const double b = dual_norm(DualVector{3.0 * f.values}, st.quad).value;
  CHECK(b == doctest::Approx(3.0 * a).epsilon(1e-6));
}

TEST_CASE("monotonicity of the operator") {
  for (double p : {1.5, 2.0, 3.0}) {
    auto st = make(31, 0.5, p, checkerboard_kernel(), 6);
    for (std::uint64_t k = 0; k < 10; ++k) {
      const VectorXd U = random_smooth(st.quad->grid(), 2 * k);
      const VectorXd V = random_smooth(st.quad->grid(), 2 * k + 1);
      const auto m = monotonicity_gap(*st.op, U, V);
      CHECK(m.pairing >= 0.0);
      if (p >= 2.0) CHECK(m.pairing >= m.lower_bound - m.rounding);
    }
  }
  (void)hat_at;
}

TEST_CASE("Simon sweep over mixed magnitudes") {
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    const auto sw = simon_sweep(p, 100000, 3);
    CHECK(sw.samples == 100000);
    CHECK(sw.min_gap >= 0.0);
  }
}

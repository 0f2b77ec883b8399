#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fraclab/fraccalc.hpp"
#include "fraclab/solver.hpp"

using namespace fraclab;
using Eigen::VectorXd;

namespace {

// Reference values from tests/oracles/oracles.py (independent t-substitution quadrature).
constexpr double kParabolaSeminormPow = 7.997475742727907;  // (1-x^2)_+ interpolant, M=64, s=1/2, p=2
constexpr double kHatSeminormPow = 5.545177444479562;       // hat at 0, M=63, s=1/2, p=2 (= 8 ln 2)
constexpr double kHatCosineEnergy = 5.40678937907339;       // hat at 0, M=63, s=1/2, p=3, separable cosine

double hat63(double x) { return std::max(0.0, 1.0 - 32.0 * std::abs(x)); }

std::shared_ptr<const PairQuadrature> make_quad(int M, double s, double p, int depth = 8) {
  return pair_quadrature(build_grid(1.0, 4.0, M), FracParams{s, p}, depth);
}

}  // namespace

TEST_CASE("sgrad of the zero function vanishes") {
  auto q = make_quad(15, 0.5, 2.0);
  const PairField d = sgrad(DiscreteFunction::zero(q->grid_ptr()), q);
  CHECK(d.values().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sgrad samples the difference quotient") {
  auto q = make_quad(3, 0.5, 2.0, 4);
  const auto u = DiscreteFunction::interpolate(q->grid_ptr(), [](double x) { return std::max(0.0, 1.0 - 2.0 * std::abs(x)); });
  // Hat at 0 with h = 1/2: (u(0) - u(1/2)) / (1/2)^{1/p+s} = 2.
  CHECK((u(0.0) - u(0.5)) / std::pow(0.5, FracParams{0.5, 2.0}.alpha()) == doctest::Approx(2.0));
  const PairField d = sgrad(u, q);
  const double a = q->params().alpha();
  for (std::size_t k = 0; k < q->upper_size(); k += 7) {
    const double x = q->x()[k], y = q->y()[k];
    CHECK(d.upper(k) == doctest::Approx((u(x) - u(y)) / std::pow(q->r()[k], a)).epsilon(1e-10));
  }
  CHECK(d.antisymmetry_defect() <= 1e-14);
}

TEST_CASE("seminorm against the independent oracle") {
  SUBCASE("parabola, M = 64") {
    auto q = make_quad(64, 0.5, 2.0);
    const auto u = DiscreteFunction::interpolate(q->grid_ptr(), [](double x) { return 1.0 - x * x; });
    const auto rep = seminorm(u, *q);
    CHECK(std::abs(rep.full_pow - kParabolaSeminormPow) / kParabolaSeminormPow <= 1e-3);
    CHECK(rep.truncated_pow < rep.full_pow);
  }
  SUBCASE("hat, M = 63") {
    auto q = make_quad(63, 0.5, 2.0);
    const auto u = DiscreteFunction::interpolate(q->grid_ptr(), hat63);
    CHECK(std::abs(seminorm(u, *q).full_pow - kHatSeminormPow) / kHatSeminormPow <= 1e-3);
  }
}

TEST_CASE("seminorm homogeneity and zero") {
  auto q = make_quad(31, 0.4, 3.0);
  const auto u = DiscreteFunction::interpolate(q->grid_ptr(), [](double x) { return std::cos(1.3 * x) - std::cos(1.3); });
  const auto v = DiscreteFunction(q->grid_ptr(), -2.0 * u.values());
  CHECK(seminorm(v, *q).value == doctest::Approx(2.0 * seminorm(u, *q).value).epsilon(1e-13));
  CHECK(seminorm(DiscreteFunction::zero(q->grid_ptr()), *q).value == 0.0);
}

TEST_CASE("energy") {
  SUBCASE("unit kernel without load is the scaled seminorm") {
    auto q = make_quad(31, 0.6, 1.7);
    NonlocalOperator op(q, constant_kernel(1.0));
    const VectorXd U = random_smooth(q->grid(), 3);
    CHECK(op.energy(U) == doctest::Approx(op.seminorm_pow(U) / (2.0 * 1.7)).epsilon(1e-13));
    CHECK(op.energy(VectorXd::Zero(31)) == 0.0);
  }
  SUBCASE("separable cosine, hat, p = 3 against the oracle") {
    auto q = make_quad(63, 0.5, 3.0);
    NonlocalOperator op(q, separable_cosine_kernel(1.0, 2.0));
    const auto u = DiscreteFunction::interpolate(q->grid_ptr(), hat63);
    const DualVector none{VectorXd::Zero(63)};
    CHECK(std::abs(energy(u, op, none) - kHatCosineEnergy) / kHatCosineEnergy <= 1e-3);
  }
}

TEST_CASE("operator is the derivative of the energy") {
  for (double p : {1.5, 2.0, 3.0}) {
    CAPTURE(p);
    auto q = make_quad(31, 0.45, p, 6);
    NonlocalOperator op(q, checkerboard_kernel(1.0, 2.0));
    const VectorXd U = random_smooth(q->grid(), 21);
    const VectorXd V = random_smooth(q->grid(), 22);
    const double t = 1e-5;
    const double fd = (op.energy(U + t * V) - op.energy(U - t * V)) / (2.0 * t);
    const double an = op.gradient(U).dot(V);
    CHECK(std::abs(fd - an) / std::abs(an) <= 1e-6);
  }
}

TEST_CASE("apply_La is linear for p = 2") {
  auto q = make_quad(31, 0.5, 2.0);
  NonlocalOperator op(q, constant_kernel(1.0));
  const auto u = DiscreteFunction(q->grid_ptr(), random_smooth(q->grid(), 1));
  const auto w = DiscreteFunction(q->grid_ptr(), random_smooth(q->grid(), 2));
  const auto uw = DiscreteFunction(q->grid_ptr(), u.values() + w.values());
  const VectorXd lhs = apply_La(uw, op).values;
  const VectorXd rhs = apply_La(u, op).values + apply_La(w, op).values;
  CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
  CHECK(apply_La(DiscreteFunction::zero(q->grid_ptr()), op).values.norm() == 0.0);
}

TEST_CASE("divergence of trivial fields") {
  auto q = make_quad(31, 0.5, 2.0);
  const double h = q->grid().spacing();
  CHECK(sdiv(PairField::zero(q), h).values.norm() == 0.0);
  const PairField sym = PairField::from_function(q, [](double x, double y) { return std::cos(x + y) + x * x * y * y; });
  CHECK(sdiv(sym, h).values.cwiseAbs().maxCoeff() <= 1e-14);
  const auto u = DiscreteFunction(q->grid_ptr(), random_smooth(q->grid(), 5));
  double lhs = 0.0;
  const PairField du = sgrad(u, q);
  for (std::size_t k = 0; k < q->upper_size(); ++k) lhs += q->w()[k] * (sym.upper(k) * du.upper(k) + sym.lower(k) * du.lower(k));
  CHECK(std::abs(lhs) <= 1e-12);
  CHECK(ibp_check(sym, u, h) <= 1e-12);
  CHECK_THROWS_AS(sdiv(sym, 0.1 * h), ValidationError);
}

TEST_CASE("divergence of the flux of sqrt(1-x^2) is 2 pi") {
  auto q = make_quad(256, 0.5, 2.0);
  auto U = [](double x) { return std::sqrt(std::max(0.0, 1.0 - x * x)); };
  const PairField phi = PairField::from_function(
      q, [&](double x, double y) { return (U(x) - U(y)) / std::abs(x - y); }, PairTag::flux, true);
  const VectorXd d = dual_to_nodal(q->grid(), sdiv_extrapolated(phi).limit);
  double worst = 0.0;
  for (int i = 0; i < q->grid().interior_count(); ++i)
    if (std::abs(q->grid().interior_node(i)) < 0.8) worst = std::max(worst, std::abs(0.5 * d[i] - std::numbers::pi));
  CHECK(worst <= 5e-2);
}

TEST_CASE("integration by parts on random antisymmetric fields") {
  for (auto [s, p] : {std::pair{0.3, 2.0}, std::pair{0.5, 3.0}, std::pair{0.7, 1.5}}) {
    CAPTURE(s);
    auto q = make_quad(31, s, p, 6);
    std::mt19937_64 rng(99);
    std::normal_distribution<double> nd;
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      const double a = nd(rng), b = nd(rng), c = nd(rng);
      const PairField phi = PairField::from_function(
          q, [=](double x, double y) { return a * (x - y) + b * (std::sin(3 * x) - std::sin(3 * y)) + c * (x * x * y - y * y * x); },
          PairTag::general, true);
      const auto u = DiscreteFunction(q->grid_ptr(), random_smooth(q->grid(), 100 + k));
      worst = std::max(worst, ibp_check(phi, u, q->grid().spacing()));
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("poincare constant is finite and positive") {
  auto q = make_quad(63, 0.5, 2.0, 6);
  const auto rep = empirical_poincare(*q);
  CHECK(rep.constant > 0.0);
  CHECK(std::isfinite(rep.constant));
  CHECK(rep.ratios.size() == 8);
}

TEST_CASE("lp norm and pairing") {
  auto q = make_quad(63, 0.5, 2.0, 4);
  const auto one_minus = DiscreteFunction::interpolate(q->grid_ptr(), [](double x) { return 1.0 - x * x; });
  CHECK(pairing(one_minus, [](double) { return 1.0; }, *q) == doctest::Approx(4.0 / 3.0).epsilon(1e-3));
  CHECK(lp_norm(one_minus, *q) == doctest::Approx(std::sqrt(16.0 / 15.0)).epsilon(1e-3));
}

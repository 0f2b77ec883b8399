#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "fraclab/fraclab.hpp"

using namespace fraclab;

namespace {

std::shared_ptr<const PairQuadrature> quadrature(int M, double s, double p) {
  return pair_quadrature(build_grid(1.0, 4.0, M), FracParams{s, p}, 8);
}

void BM_PairQuadrature(benchmark::State& state) {
  const int M = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(quadrature(M, 0.5, 2.0));
}
BENCHMARK(BM_PairQuadrature)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_OperatorAssembly(benchmark::State& state) {
  const auto q = quadrature(static_cast<int>(state.range(0)), 0.5, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(NonlocalOperator(q, checkerboard_kernel()));
}
BENCHMARK(BM_OperatorAssembly)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Gradient(benchmark::State& state) {
  const auto q = quadrature(static_cast<int>(state.range(0)), 0.5, 3.0);
  const NonlocalOperator op(q, radial_bump_kernel());
  const Eigen::VectorXd U = random_smooth(q->grid(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(op.gradient(U));
}
BENCHMARK(BM_Gradient)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_GetoorSolve(benchmark::State& state) {
  const auto q = quadrature(256, 0.5, 2.0);
  auto op = std::make_shared<const NonlocalOperator>(q, constant_kernel(1.0));
  const DualVector f = load_from_density(q->grid(), q->domain_rule(), [](double) { return std::numbers::pi; });
  SolverOptions opt;
  opt.compute_bounds = false;
  opt.keep_flux = false;
  for (auto _ : state) benchmark::DoNotOptimize(solve({op, f}, opt));
}
BENCHMARK(BM_GetoorSolve)->Unit(benchmark::kMillisecond);

void BM_NonlinearSolve(benchmark::State& state) {
  const double p = static_cast<double>(state.range(0)) / 10.0;
  const auto q = quadrature(128, 0.5, p);
  auto op = std::make_shared<const NonlocalOperator>(q, checkerboard_kernel());
  const DualVector f = load_from_density(q->grid(), q->domain_rule(), [](double) { return 1.0; });
  SolverOptions opt;
  opt.compute_bounds = false;
  opt.keep_flux = false;
  for (auto _ : state) benchmark::DoNotOptimize(solve({op, f}, opt));
}
BENCHMARK(BM_NonlinearSolve)->Arg(15)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

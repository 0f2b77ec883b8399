#include "fraclab/gamma.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fraclab/parallel.hpp"

namespace fraclab {

LegendreValue legendre(const EnergyFunctional& E, const DualVector& f, const SolverOptions& options) {
  if (!f.values.allFinite()) throw ValidationError("legendre: load must be finite");
  const NonlocalOperator& op = E.op();
  SolverOptions opt = options;
  opt.compute_bounds = false;
  opt.keep_flux = false;
  const SolveReport r = solve(DirichletProblem{E.op_ptr(), f}, opt);
  LegendreValue out;
  const double fu = f(r.u);
  out.value = fu - op.energy(r.u.values());
  out.conjugate_form = fu / op.params().p_conj();
  out.identity_defect = std::abs(out.value - out.conjugate_form);
  out.residual = r.residual;
  out.u = r.u;
  return out;
}

FenchelCheck fenchel_check(const EnergyFunctional& E, const DualVector& f, double conjugate, int probes,
                           std::uint64_t seed, double tol) {
  FenchelCheck out;
  out.worst = -std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> scale(-2.0, 2.0);
  for (int k = 0; k < probes; ++k) {
    Eigen::VectorXd v = random_smooth(E.op().grid(), seed + 31 * static_cast<std::uint64_t>(k));
    v *= scale(rng);
    const double gap = f(v) - E(v) - conjugate;
    out.worst = std::max(out.worst, gap);
  }
  out.passed = out.worst <= tol;
  return out;
}

std::vector<LoadEntry> default_load_dictionary(double L, std::uint64_t seed) {
  constexpr double pi = std::numbers::pi;
  std::vector<LoadEntry> d;
  d.push_back({"one", [](double) { return 1.0; }});
  d.push_back({"x", [=](double x) { return x / L; }});
  d.push_back({"x2", [=](double x) { return (x / L) * (x / L); }});
  d.push_back({"one_minus_x2", [=](double x) { return 1.0 - (x / L) * (x / L); }});
  d.push_back({"cubic", [=](double x) { return std::pow(x / L, 3) - 0.5 * x / L; }});
  d.push_back({"cos_half_pi", [=](double x) { return std::cos(0.5 * pi * x / L); }});
  d.push_back({"sin_pi", [=](double x) { return std::sin(pi * x / L); }});
  d.push_back({"cos_two_pi", [=](double x) { return std::cos(2.0 * pi * x / L); }});
  d.push_back({"bump", [=](double x) {
                 const double z = 2.0 * x / L;
                 const double q = 1.0 - z * z;
                 return q <= 0.0 ? 0.0 : std::exp(1.0 - 1.0 / q);
               }});
  d.push_back({"gauss", [=](double x) { return std::exp(-8.0 * (x / L - 0.3) * (x / L - 0.3)); }});
  for (int r = 0; r < 2; ++r) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r));
    std::normal_distribution<double> normal;
    std::vector<double> a(5), b(5);
    for (int k = 0; k < 5; ++k) {
      a[static_cast<std::size_t>(k)] = normal(rng) / (k + 1);
      b[static_cast<std::size_t>(k)] = normal(rng) / (k + 1);
    }
    const double c0 = 1.0 + std::abs(normal(rng));
    d.push_back({"random_" + std::to_string(r + 1), [=](double x) {
                   double v = c0;
                   for (int k = 0; k < 5; ++k) {
                     const double t = (k + 1) * pi * x / L;
                     v += a[static_cast<std::size_t>(k)] * std::cos(t) + b[static_cast<std::size_t>(k)] * std::sin(t);
                   }
                   return v;
                 }});
  }
  return d;
}

GammaReport gamma_diagnostic(const std::vector<EnergyFunctional>& sequence, const std::vector<int>& n,
                             const EnergyFunctional& limit, const std::vector<LoadEntry>& loads, double rel_tol,
                             const SolverOptions& options, int threads) {
  if (sequence.size() != n.size()) throw ValidationError("gamma diagnostic: index list and sequence differ in length");
  if (sequence.empty()) throw ValidationError("gamma diagnostic needs a nonempty sequence");
  if (loads.empty()) throw ValidationError("gamma diagnostic needs at least one load");
  const Grid& grid = limit.op().grid();
  const DomainRule& rule = limit.op().quadrature().domain_rule();
  std::vector<DualVector> f;
  for (const auto& l : loads) f.push_back(load_from_density(grid, rule, l.density));

  const std::size_t S = sequence.size();
  const std::size_t F = loads.size();
  // conj[k][j]: member k (k = S is the limit), load j.
  std::vector<std::vector<double>> conj(S + 1, std::vector<double>(F, 0.0));
  std::vector<std::vector<double>> ident(S + 1, std::vector<double>(F, 0.0));
  parallel_for(
      S + 1,
      [&](std::size_t k) {
        const EnergyFunctional& E = k < S ? sequence[k] : limit;
        for (std::size_t j = 0; j < F; ++j) {
          const LegendreValue lv = legendre(E, f[j], options);
          conj[k][j] = lv.value;
          ident[k][j] = lv.identity_defect;
        }
      },
      threads);

  GammaReport rep;
  rep.tolerance = rel_tol;
  for (std::size_t j = 0; j < F; ++j) {
    GammaLoadVerdict v;
    v.load = loads[j].name;
    v.limit_conjugate = conj[S][j];
    for (std::size_t k = 0; k < S; ++k)
      rep.rows.push_back({loads[j].name, n[k], conj[k][j], std::abs(conj[k][j] - conj[S][j]), ident[k][j]});
    for (std::size_t k = 0; k <= S; ++k) rep.max_identity_defect = std::max(rep.max_identity_defect, ident[k][j]);
    v.final_defect = std::abs(conj[S - 1][j] - conj[S][j]);
    v.relative_defect = v.final_defect / std::abs(v.limit_conjugate);
    v.decreasing = S < 2 || v.final_defect <= std::abs(conj[S - 2][j] - conj[S][j]);
    v.passed = v.relative_defect <= rel_tol;
    if (!v.passed) ++rep.failures;
    rep.loads.push_back(std::move(v));
  }
  rep.passed = rep.failures == 0;
  return rep;
}

}  // namespace fraclab

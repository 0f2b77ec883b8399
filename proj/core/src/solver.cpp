#include "fraclab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace fraclab {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct NewtonResult {
  VectorXd U;
  double residual = 0.0;
  double effective_tol = 0.0;
  int iterations = 0;
  std::vector<double> history;
};

VectorXd warm_start(const NonlocalOperator& op, const VectorXd& F) {
  Eigen::LLT<MatrixXd> llt(op.quadratic_stiffness());
  if (llt.info() != Eigen::Success) return VectorXd::Zero(F.size());
  VectorXd U = llt.solve(F);
  if (op.params().quadratic()) return U;
  // J(tU) = t^p E(U) - t <F,U> is minimised at t^{p-1} = <F,U> / (p E(U)).
  const double E = op.energy(U);
  const double fu = F.dot(U);
  if (E > 0.0 && fu > 0.0) U *= std::pow(fu / (op.params().p * E), 1.0 / (op.params().p - 1.0));
  return U;
}

NewtonResult newton(const NonlocalOperator& op, const VectorXd& F, VectorXd U, double tol, int max_iter,
                    bool far_start) {
  const DualVector f{F};
  NewtonResult out;
  double J = op.energy(U, f);
  out.history.push_back(J);
  VectorXd G = op.gradient(U) - F;
  double res = G.norm();
  VectorXd best = U;
  double best_res = res;
  std::optional<Eigen::LLT<MatrixXd>> fallback;
  const double fnorm = std::max(F.norm(), std::numeric_limits<double>::min());
  bool coarse = far_start && op.params().p < 2.0;

  // Rounding floor of the residual; 4x margin so that a converged iterate is recognised.
  auto target = [&](const VectorXd& V) { return std::max(tol, 4.0 * op.gradient_rounding(V)); };
  double eff_tol = target(U);
  int it = 0;
  for (; it < max_iter && res > eff_tol; ++it) {
    const VectorXd D = op.differences(U);
    const double scale = std::max(D.cwiseAbs().maxCoeff(), op.domain_values(U).cwiseAbs().maxCoeff());
    // For p < 2 the weights |v|^{p-2} blow up at vanishing differences and freeze sign changes of an arbitrary
    // start; from a caller-supplied iterate a coarse regularisation is used until the residual drops below |F| / 10.
    if (coarse && (res <= 0.1 * fnorm || it >= 40)) coarse = false;
    const double rel = coarse ? 1e-1 : 1e-8;
    const double reg = rel * (scale > 0.0 ? scale : 1.0);
    Eigen::LLT<MatrixXd> llt(op.hessian(U, reg));
    VectorXd d;
    if (llt.info() == Eigen::Success) d = -llt.solve(G);
    if (d.size() == 0 || !d.allFinite() || G.dot(d) >= 0.0) {
      if (!fallback) fallback.emplace(op.quadratic_stiffness());
      d = -fallback->solve(G);
    }
    const double slope = G.dot(d);
    VectorXd Unew;
    VectorXd Gnew;
    double Jt = J;
    // Energy sums carry rounding of roughly 1e-12 |J|; below that, line-search on the residual instead.
    const double energy_floor = 1e-12 * std::max(std::abs(J), 1e-300);
    bool accepted = false;
    double t = 1.0;
    while (t * -slope > energy_floor) {
      Jt = op.energy(U + t * d, f);
      if (Jt <= J + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (accepted) {
      Unew = U + t * d;
      Gnew = op.gradient(Unew) - F;
    } else {
      t = 1.0;
      for (; t > 1e-6; t *= 0.5) {
        Unew = U + t * d;
        Gnew = op.gradient(Unew) - F;
        if (Gnew.norm() < res) break;
      }
      if (!(Gnew.norm() < res)) break;
      Jt = op.energy(Unew, f);
    }
    U = std::move(Unew);
    G = std::move(Gnew);
    J = Jt;
    res = G.norm();
    if (res < 100.0 * eff_tol) eff_tol = target(U);
    out.history.push_back(J);
    if (res < best_res) {
      best_res = res;
      best = U;
    }
  }
  out.iterations = it;
  out.effective_tol = std::max(eff_tol, target(best));
  if (best_res > out.effective_tol) {
    std::ostringstream msg;
    msg << "descent solver did not reach tol " << out.effective_tol << " within " << max_iter << " iterations (residual "
        << best_res << ")";
    throw NonConvergence(msg.str(), best, best_res, it);
  }
  out.U = best;
  out.residual = best_res;
  return out;
}

}  // namespace

VectorXd random_smooth(const Grid& grid, std::uint64_t seed, int modes) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double L = grid.half_width();
  std::vector<double> c(static_cast<std::size_t>(modes));
  for (int k = 0; k < modes; ++k) c[static_cast<std::size_t>(k)] = normal(rng) / (k + 1);
  VectorXd U(grid.interior_count());
  for (int i = 0; i < grid.interior_count(); ++i) {
    const double x = grid.interior_node(i);
    double v = 0.0;
    for (int k = 0; k < modes; ++k)
      v += c[static_cast<std::size_t>(k)] * std::sin((k + 1) * std::numbers::pi * (x + L) / (2.0 * L));
    U[i] = v;
  }
  return U;
}

SolveReport solve(const DirichletProblem& prob, const SolverOptions& options) {
  if (!prob.op) throw ValidationError("problem has no operator");
  const NonlocalOperator& op = *prob.op;
  const FracParams& prm = op.params();
  const int m = op.size();
  const VectorXd& F = prob.load.values;
  if (F.size() != m) throw ValidationError("load has wrong size");
  if (!F.allFinite()) throw ValidationError("load must be finite");
  if (options.max_iter < 1) throw ValidationError("max_iter must be >= 1");
  const double tol = options.tolerance(prm);
  if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");

  SolveReport rep;
  rep.tol = tol;
  rep.max_iter = options.max_iter;
  VectorXd U;
  if (prm.quadratic() && !options.force_iterative) {
    rep.method = "cholesky";
    const MatrixXd& K = op.quadratic_stiffness();
    Eigen::LLT<MatrixXd> llt(K);
    if (llt.info() != Eigen::Success) throw NonConvergence("stiffness matrix is not positive definite", VectorXd::Zero(m), F.norm(), 0);
    U = llt.solve(F);
    U += llt.solve(F - K * U);  // one step of iterative refinement
    rep.energy_history = {0.0, op.energy(U, prob.load)};
    rep.iterations = 1;
    rep.effective_tol = tol;
    rep.residual = (op.gradient(U) - F).norm();
    if (rep.residual > tol) {
      std::ostringstream msg;
      msg << "direct solve residual " << rep.residual << " exceeds tol " << tol;
      throw NonConvergence(msg.str(), U, rep.residual, 1);
    }
  } else {
    rep.method = "newton-armijo";
    VectorXd U0;
    if (options.initial) {
      if (options.initial->size() != m) throw ValidationError("initial iterate has wrong size");
      U0 = *options.initial;
    } else if (F.squaredNorm() == 0.0) {
      U0 = VectorXd::Zero(m);
    } else {
      U0 = warm_start(op, F);
    }
    NewtonResult nr = newton(op, F, std::move(U0), tol, options.max_iter, options.initial.has_value());
    U = std::move(nr.U);
    rep.residual = nr.residual;
    rep.effective_tol = nr.effective_tol;
    rep.iterations = nr.iterations;
    rep.energy_history = std::move(nr.history);
  }

  rep.energy = op.energy(U, prob.load);
  rep.seminorm = std::pow(op.seminorm_pow(U), 1.0 / prm.p);
  rep.flux_norm = std::pow(op.flux_norm_pow(U), 1.0 / prm.p_conj());
  if (options.keep_flux) rep.flux = op.flux(U);
  if (options.compute_bounds) {
    double dn;
    if (options.load_dual_norm) {
      dn = *options.load_dual_norm;
    } else {
      SolverOptions aux;
      aux.tol = options.tol;
      aux.max_iter = options.max_iter;
      dn = dual_norm(prob.load, op.quadrature_ptr(), aux).value;
    }
    rep.load_dual_norm = dn;
    rep.apriori_bound = std::pow(2.0 * dn / op.lambda(), 1.0 / (prm.p - 1.0));
    rep.flux_bound = 2.0 * op.Lambda() / op.lambda() * dn;
  }
  rep.u = DiscreteFunction(op.grid_ptr(), std::move(U));
  return rep;
}

DualNormReport dual_norm(const DualVector& f, std::shared_ptr<const PairQuadrature> quad, const SolverOptions& options) {
  if (!f.values.allFinite()) throw ValidationError("dual_norm: load must be finite");
  const FracParams prm = quad->params();
  auto op = std::make_shared<const NonlocalOperator>(quad, constant_kernel(1.0));
  DualNormReport rep;
  if (f.values.squaredNorm() == 0.0) {
    rep.maximizer = DiscreteFunction::zero(quad->grid_ptr());
    return rep;
  }
  SolverOptions opt = options;
  opt.compute_bounds = false;
  opt.keep_flux = false;
  const SolveReport sr = solve(DirichletProblem{op, f}, opt);
  rep.maximizer_seminorm = sr.seminorm;
  rep.value = 0.5 * prm.normalization * std::pow(sr.seminorm, prm.p - 1.0);
  rep.maximizer = DiscreteFunction(quad->grid_ptr(), sr.u.values() / sr.seminorm);
  return rep;
}

MinimizerCheck verify_minimizer(const VectorXd& U, const NonlocalOperator& op, const DualVector& f, int trials,
                                double tol, std::uint64_t seed) {
  MinimizerCheck out;
  out.trials = trials;
  const double J0 = op.energy(U, f);
  const double p = op.params().p;
  std::vector<VectorXd> dirs;
  // The residual direction first: it exposes any first-order defect directly.
  VectorXd g = f.values - op.gradient(U);
  if (g.squaredNorm() > 0.0) dirs.push_back(g);
  for (int k = 0; k < trials; ++k) dirs.push_back(random_smooth(op.grid(), seed + static_cast<std::uint64_t>(k)));
  out.worst_margin = std::numeric_limits<double>::infinity();
  for (VectorXd v : dirs) {
    const double sv = std::pow(op.seminorm_pow(v), 1.0 / p);
    if (!(sv > 0.0)) continue;
    v /= sv;
    const double slack = 10.0 * tol * 2.0;  // 10 tol (1 + [v]) with [v] = 1
    for (double t : {-1e-1, -1e-2, 1e-2, 1e-1}) {
      const double margin = op.energy(U + t * v, f) - J0 + slack;
      if (margin < out.worst_margin) {
        out.worst_margin = margin;
        out.worst_t = t;
      }
    }
  }
  if (!std::isfinite(out.worst_margin)) out.worst_margin = 0.0;
  out.passed = out.worst_margin >= 0.0;
  return out;
}

UniquenessReport uniqueness_probe(const DirichletProblem& prob, int inits, const SolverOptions& options,
                                  std::uint64_t seed) {
  if (inits < 2) throw ValidationError("uniqueness_probe needs at least two initial iterates");
  const NonlocalOperator& op = *prob.op;
  const FracParams& prm = op.params();
  UniquenessReport rep;
  const double tol = options.tolerance(prm);
  rep.threshold = 10.0 * std::pow(tol, 1.0 / (prm.p - 1.0));
  std::vector<VectorXd> sols;
  for (int i = 0; i < inits; ++i) {
    SolverOptions opt = options;
    opt.force_iterative = true;
    opt.compute_bounds = false;
    opt.keep_flux = false;
    opt.initial = random_smooth(op.grid(), seed + 977 * static_cast<std::uint64_t>(i));
    const SolveReport sr = solve(prob, opt);
    rep.iterations.push_back(sr.iterations);
    sols.push_back(sr.u.values());
  }
  for (std::size_t i = 0; i < sols.size(); ++i)
    for (std::size_t j = i + 1; j < sols.size(); ++j)
      rep.max_distance = std::max(rep.max_distance, lp_norm(VectorXd(sols[i] - sols[j]), op.quadrature()));
  return rep;
}

double simon_constant(double p) {
  if (!(p > 1.0)) throw ValidationError("simon_constant needs p > 1");
  return p >= 2.0 ? std::pow(2.0, 2.0 - p) : 0.5 * (p - 1.0);
}

SimonValue simon_gap(double a, double b, double p) {
  const auto phi = [p](double v) { return v == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(v), p - 1.0), v); };
  SimonValue out;
  out.lhs = (phi(a) - phi(b)) * (a - b);
  const double d = std::abs(a - b);
  const double cp = simon_constant(p);
  if (p >= 2.0) {
    // At p = 2 the inequality is an identity; squaring keeps both sides bit-equal.
    out.rhs = p == 2.0 ? cp * d * d : cp * std::pow(d, p);
  } else {
    const double s = std::abs(a) + std::abs(b);
    out.rhs = s == 0.0 ? 0.0 : cp * d * d / std::pow(s, 2.0 - p);
  }
  return out;
}

SimonSweep simon_sweep(double p, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> wide(-10.0, 10.0);
  std::uniform_real_distribution<double> expo(-6.0, 6.0);
  std::normal_distribution<double> nd;
  std::bernoulli_distribution sign;
  SimonSweep out;
  out.samples = samples;
  out.min_gap = std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    double a = 0.0, b = 0.0;
    switch (k % 4) {
      case 0:
      case 1:
        a = wide(rng);
        b = wide(rng);
        break;
      case 2:
        a = wide(rng);
        b = a + 1e-3 * nd(rng);
        break;
      default:
        a = (sign(rng) ? 1.0 : -1.0) * std::pow(10.0, expo(rng));
        b = (sign(rng) ? 1.0 : -1.0) * std::pow(10.0, expo(rng));
    }
    const SimonValue v = simon_gap(a, b, p);
    if (v.lhs - v.rhs < out.min_gap) {
      out.min_gap = v.lhs - v.rhs;
      out.worst_a = a;
      out.worst_b = b;
    }
  }
  return out;
}

BoundCheck check_bounds(const VectorXd& U, const NonlocalOperator& op, double load_dual_norm, double slack) {
  const FracParams& prm = op.params();
  BoundCheck out;
  out.dual_norm = load_dual_norm;
  out.seminorm = std::pow(op.seminorm_pow(U), 1.0 / prm.p);
  out.apriori_bound = std::pow(2.0 * load_dual_norm / op.lambda(), 1.0 / (prm.p - 1.0));
  out.flux_norm_pow = op.flux_norm_pow(U);
  out.flux_bound_pow = std::pow(2.0 * op.Lambda() / op.lambda() * load_dual_norm, prm.p_conj());
  out.passed = out.seminorm <= (1.0 + slack) * out.apriori_bound && out.flux_norm_pow <= (1.0 + slack) * out.flux_bound_pow;
  return out;
}

MonotonicityValue monotonicity_gap(const NonlocalOperator& op, const VectorXd& U, const VectorXd& V) {
  MonotonicityValue out;
  const VectorXd diff = U - V;
  const VectorXd gu = op.gradient(U);
  const VectorXd gv = op.gradient(V);
  out.pairing = (gu - gv).dot(diff);
  out.rounding = 1000.0 * std::numeric_limits<double>::epsilon() *
                 (gu.cwiseAbs() + gv.cwiseAbs()).dot(diff.cwiseAbs());
  const double p = op.params().p;
  if (p >= 2.0) out.lower_bound = 0.5 * op.lambda() * simon_constant(p) * op.seminorm_pow(diff);
  return out;
}

}  // namespace fraclab

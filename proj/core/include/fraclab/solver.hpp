#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fraclab/fraccalc.hpp"

namespace fraclab {

/// L_a u = f in Omega, u = 0 outside.
struct DirichletProblem {
  std::shared_ptr<const NonlocalOperator> op;
  DualVector load;
};

struct SolverOptions {
  /// Residual tolerance; 0 selects 1e-9 for p = 2 and 1e-7 otherwise.
  double tol = 0.0;
  int max_iter = 200;
  /// Starting iterate; by default the rescaled quadratic warm start.
  std::optional<Eigen::VectorXd> initial;
  /// Use the iterative path even for p = 2.
  bool force_iterative = false;
  /// Known dual norm of the load (skips the auxiliary a = 1 solve for the bounds).
  std::optional<double> load_dual_norm;
  /// Compute the a-priori and flux bounds (needs the dual norm).
  bool compute_bounds = true;
  /// Store the flux pair field in the report.
  bool keep_flux = true;

  [[nodiscard]] double tolerance(const FracParams& p) const {
    return tol > 0.0 ? tol : (p.quadratic() ? 1e-9 : 1e-7);
  }
};

struct SolveReport {
  DiscreteFunction u;
  double energy = 0.0;    ///< J(u) including the load term
  double residual = 0.0;  ///< Euclidean norm of the nodal dual vector L_a u - f
  int iterations = 0;
  double seminorm = 0.0;      ///< [u]_{s,p}
  double flux_norm = 0.0;     ///< ||xi||_{p'}
  std::optional<PairField> flux;
  double load_dual_norm = std::numeric_limits<double>::quiet_NaN();
  double apriori_bound = std::numeric_limits<double>::quiet_NaN();  ///< (2 ||f|| / lambda)^{1/(p-1)}
  double flux_bound = std::numeric_limits<double>::quiet_NaN();     ///< (2 Lambda / lambda) ||f||
  double tol = 0.0;
  /// Residual reached when the requested tol is below the double-precision floor of the
  /// gradient (possible for p < 2 where |D u|^{p-2} is unbounded on flat regions); else tol.
  double effective_tol = 0.0;
  int max_iter = 0;
  std::string method;
  /// J along the iterates, starting with the initial one.
  std::vector<double> energy_history;
};

/// Raised when the iteration budget is exhausted; carries the best iterate.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, Eigen::VectorXd best, double residual, int iterations)
      : Error(what), best_(std::move(best)), residual_(residual), iterations_(iterations) {}
  [[nodiscard]] const Eigen::VectorXd& best_iterate() const { return best_; }
  [[nodiscard]] double residual() const { return residual_; }
  [[nodiscard]] int iterations() const { return iterations_; }

 private:
  Eigen::VectorXd best_;
  double residual_;
  int iterations_;
};

/// Minimizes J(u) = E(u) - <f, u>.
///
/// p = 2: one Cholesky solve of the stiffness. Otherwise damped Newton with
/// an Armijo line search on J; the Hessian is regularized where D u vanishes
/// and the quadratic stiffness is the fallback when it is not positive definite.
SolveReport solve(const DirichletProblem& prob, const SolverOptions& options = {});

struct DualNormReport {
  double value = 0.0;
  /// u_f / [u_f], the maximizer of <f, v> over [v] = 1.
  DiscreteFunction maximizer;
  double maximizer_seminorm = 0.0;
};
/// ||f||_{-s,p'} = (1/2) [u_f]^{p-1} where L_1 u_f = f.
DualNormReport dual_norm(const DualVector& f, std::shared_ptr<const PairQuadrature> quad, const SolverOptions& options = {});

struct MinimizerCheck {
  bool passed = true;
  int trials = 0;
  double worst_margin = 0.0;  ///< min over trials of J(u + t v) - J(u) + slack
  double worst_t = 0.0;
};
/// J(u + t v) >= J(u) - 10 tol (1 + [v]) for random smooth directions v with [v] = 1.
MinimizerCheck verify_minimizer(const Eigen::VectorXd& U, const NonlocalOperator& op, const DualVector& f, int trials,
                                double tol, std::uint64_t seed = 7);

struct UniquenessReport {
  double max_distance = 0.0;  ///< max_{i<j} ||u_i - u_j||_{L^p}
  double threshold = 0.0;     ///< 10 tol^{1/(p-1)}, a heuristic scale
  std::vector<int> iterations;
};
/// Solves from `inits` random starting iterates (always on the iterative path).
UniquenessReport uniqueness_probe(const DirichletProblem& prob, int inits, const SolverOptions& options = {},
                                  std::uint64_t seed = 11);

/// Constant c_p used in simon_gap: 2^{2-p} for p >= 2, (p-1)/2 for 1 < p < 2.
double simon_constant(double p);
struct SimonValue {
  double lhs = 0.0;
  double rhs = 0.0;
};
/// lhs = (|a|^{p-2} a - |b|^{p-2} b)(a - b); rhs = c_p |a-b|^p (p >= 2) or c_p |a-b|^2 / (|a|+|b|)^{2-p}.
SimonValue simon_gap(double a, double b, double p);
struct SimonSweep {
  double min_gap = 0.0;  ///< min over samples of lhs - rhs
  double worst_a = 0.0, worst_b = 0.0;
  int samples = 0;
};
/// simon_gap over seeded pairs: half uniform on [-10, 10], a quarter near-equal
/// (b = a + 1e-3 z) and a quarter on log-uniform magnitudes in [1e-6, 1e6] with random signs.
SimonSweep simon_sweep(double p, int samples, std::uint64_t seed);

struct BoundCheck {
  bool passed = false;
  double seminorm = 0.0;
  double apriori_bound = 0.0;
  double flux_norm_pow = 0.0;  ///< ||xi||_{p'}^{p'}
  double flux_bound_pow = 0.0; ///< (2 Lambda / lambda)^{p'} ||f||^{p'}
  double dual_norm = 0.0;
};
/// [u] <= (2 ||f|| / lambda)^{1/(p-1)} and ||xi||^{p'} <= (2 Lambda/lambda)^{p'} ||f||^{p'}, each with 1% slack.
BoundCheck check_bounds(const Eigen::VectorXd& U, const NonlocalOperator& op, double load_dual_norm,
                        double slack = 0.01);

struct MonotonicityValue {
  double pairing = 0.0;      ///< <L u - L v, u - v>
  double lower_bound = 0.0;  ///< (lambda c_p / 2) [u - v]^p for p >= 2, else 0
  double rounding = 0.0;     ///< rounding scale of the pairing: 1000 eps (|L u| + |L v|) . |u - v|
};
MonotonicityValue monotonicity_gap(const NonlocalOperator& op, const Eigen::VectorXd& U, const Eigen::VectorXd& V);

/// Random smooth admissible coefficient vector: a short sine series with N(0,1) amplitudes.
Eigen::VectorXd random_smooth(const Grid& grid, std::uint64_t seed, int modes = 6);

}  // namespace fraclab

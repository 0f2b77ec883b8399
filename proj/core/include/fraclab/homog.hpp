#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fraclab/solver.hpp"

namespace fraclab {

/// Fixed finite dictionary used to observe weak convergence.
struct ProbeDictionary {
  std::vector<std::string> nodal_names;
  std::vector<std::function<double(double)>> nodal;
  std::vector<std::string> pair_names;
  std::vector<std::function<double(double, double)>> pair;
};
/// 8 smooth nodal probes and 4 smooth pair bumps supported away from the diagonal.
ProbeDictionary default_probes(double half_width = 1.0);

/// C-infinity bump exp(1 - 1/(1 - z^2)) on |z| < 1, zero elsewhere; peak value 1.
double smooth_bump(double z);

/// Discrete convolution of lattice samples with the normalized bump of support
/// diameter delta (weights sum to one). Outside the lattice the samples are either
/// continued periodically or taken as zero.
Eigen::VectorXd mollify_samples(const Eigen::VectorXd& samples, double spacing, double delta, bool periodic);
/// Mollified nodal values of u, extended by zero outside Omega. Requires delta >= 2h.
DiscreteFunction mollify(const DiscreteFunction& u, double delta);

/// Values of a pair field on a coarse tensor grid.
struct PairTable {
  std::vector<double> coords;  ///< same coordinates on both axes
  Eigen::MatrixXd values;      ///< values(i, j) at (coords[i], coords[j])
};
/// Uniform coordinates on [-L, L] with spacing close to `spacing`.
std::vector<double> table_coordinates(double half_width, double spacing);
/// Product-bump mollification of a pair field, Shepard-normalized so constants
/// are reproduced exactly. Each cell pair is first reduced to its weighted mean.
PairTable mollify(const PairField& phi, double delta, const std::vector<double>& coords);
/// int int of the product of two tables times psi, by the tensor trapezoid rule.
double table_pairing(const PairTable& a, const PairTable& b, const std::function<double(double, double)>& psi);

struct EffectiveKernel {
  std::vector<double> coords;
  Eigen::MatrixXd a0;     ///< NaN outside the mask
  Eigen::MatrixXi mask;   ///< 1 where the estimate is defined
  double corridor_lo = 0.0;  ///< lambda
  double corridor_hi = 0.0;  ///< Lambda^{p'} / lambda
  double tau = 0.0;          ///< absolute denominator floor used
  int masked = 0;
  double min_value = 0.0;
  double max_value = 0.0;
  double max_asymmetry = 0.0;
};
/// a_0 = eta / (|Dw|^{p-2} Dw) where |Dw|^{p-1} >= tau_rel * max |Dw|^{p-1}, on
/// table points whose mollification window stays inside Omega and off the diagonal.
EffectiveKernel estimate_effective_kernel(const PairTable& eta, const PairTable& dw, const FracParams& params,
                                          double tau_rel, double delta, double half_width, double lambda,
                                          double Lambda);

struct CorridorVerdict {
  bool passed = false;
  double lo = 0.0, hi = 0.0, tol = 0.0;
  double min_value = 0.0, max_value = 0.0;
  double worst_x = 0.0, worst_y = 0.0, worst_value = 0.0;
};
/// lambda - tol <= a_0 <= Lambda^{p'}/lambda + tol on the mask, tol = 5% of the corridor width
/// (a degenerate corridor uses 5% of lambda).
CorridorVerdict validate_corridor(const EffectiveKernel& eff, double lambda, double Lambda, double p);

/// Kernel from an effective-kernel table: unmasked entries take the nearest masked
/// value, the table is symmetrized, and values in between are bilinear.
Kernel tabulated_kernel(const EffectiveKernel& eff, std::string label = "effective");

struct WeakLimitEstimate {
  std::vector<std::string> probe_names;
  std::vector<int> n;
  /// values[probe][k] for n[k]
  std::vector<std::vector<double>> values;
  std::vector<double> limit;           ///< Aitken limit from the last three n
  std::vector<std::vector<double>> cauchy;  ///< |v_k - v_{k-1}|, first entry NaN
  std::vector<bool> monotone_tail;     ///< Cauchy defect non-increasing over the last three
};
/// Aitken extrapolation of the last three entries (falls back to the last entry).
double aitken_limit(const std::vector<double>& v);
WeakLimitEstimate weak_limit_estimate(std::vector<std::string> names, std::vector<int> n,
                                      std::vector<std::vector<double>> values);

struct DivCurlTable {
  std::vector<int> n;
  std::vector<double> integral;  ///< I_n
  double limit = 0.0;            ///< Aitken limit
  std::vector<double> defect;    ///< |I_n - limit|
  /// |I_{n_{k-1}} - I_{n_{k-2}}| / |I_{n_k} - I_{n_{k-1}}| over the last doubling.
  double halving_ratio = 0.0;
  double naive_product = std::numeric_limits<double>::quiet_NaN();
  bool passed = false;
};
/// I = int int phi D v psi over Omega x Omega.
double divcurl_integral(const PairField& phi, const DiscreteFunction& v, const std::function<double(double, double)>& psi);
/// Tabulates I_n, its extrapolated limit and the last-doubling halving ratio
/// (passes when the ratio is at least min_ratio).
DivCurlTable divcurl_check(const std::vector<PairField>& phis, const std::vector<DiscreteFunction>& vs,
                           const std::function<double(double, double)>& psi, const std::vector<int>& n,
                           double min_ratio = 1.8);
DivCurlTable divcurl_table(std::vector<int> n, std::vector<double> integrals, double min_ratio = 1.8);

struct HomogConfig {
  Kernel base = checkerboard_kernel(1.0, 2.0);
  FracParams params{};
  double half_width = 1.0;
  double truncation_radius = 4.0;
  int interior_nodes = 511;
  int depth = 8;
  std::vector<int> n_list{1, 2, 4, 8, 16, 32};
  double delta = 0.25;
  double tau_rel = 1e-3;
  double table_spacing = 1.0 / 32.0;
  std::function<double(double)> load = [](double) { return 1.0; };
  /// Corrector loads; the second one cross-validates the effective kernel.
  std::function<double(double)> corrector_load = [](double x) { return std::exp(-x * x); };
  std::function<double(double)> second_corrector_load = [](double x) { return 1.0 + 0.5 * x; };
  SolverOptions solver{};
  ProbeDictionary probes = default_probes();
  int threads = 0;

  void validate() const;
};

struct SweepEntry {
  int n = 0;
  bool ok = false;
  std::string error;
  SolveReport solution;   ///< L_n u_n = f (flux dropped to save memory)
  SolveReport corrector;  ///< L_n w_n = g^1
  BoundCheck bounds;
  BoundCheck corrector_bounds;
  std::vector<double> nodal_pairings;  ///< <u_n, psi>
  std::vector<double> flux_pairings;   ///< <xi_n, Psi>
  std::vector<double> divcurl;         ///< int int xi_n D u_n Psi per pair probe
  std::vector<double> divcurl_corrector;  ///< int int xi_n D w_n Psi per pair probe
  /// Mollified fields for the effective kernel: flux and gradient of w_n for both corrector loads.
  PairTable eta1, dw1, eta2, dw2;
  PairTable xi_bar;  ///< mollified flux of u_n
  PairTable du_bar;  ///< mollified gradient of u_n
};

struct HomogResult {
  HomogConfig config;
  std::shared_ptr<const PairQuadrature> quadrature;
  double load_dual_norm = 0.0;
  double corrector_dual_norm = 0.0;
  DualVector load;
  std::vector<SweepEntry> entries;
  WeakLimitEstimate solution_limits;
  WeakLimitEstimate flux_limits;
  std::vector<DivCurlTable> divcurl;  ///< (xi_n, u_n), one per pair probe
  std::vector<DivCurlTable> divcurl_corrector;  ///< (xi_n, w_n), one per pair probe
  bool bounds_uniform = false;

  /// Entry for index n, or nullptr.
  [[nodiscard]] const SweepEntry* entry(int n) const;
};

/// Solves L_n u_n = f and the corrector problems for every n, computing probe
/// pairings, bound checks, div-curl integrals and mollified tables. Failures of
/// individual n are recorded in the entry without aborting the sweep.
HomogResult run_sequence(const HomogConfig& config);

struct CorrectorResult {
  std::vector<int> n;
  std::vector<DiscreteFunction> w;
  DiscreteFunction w_bar;  ///< mollified terminal corrector
  PairTable eta_bar;       ///< mollified terminal corrector flux
  PairTable dw_bar;        ///< mollified terminal corrector gradient
};
/// Corrector sequence L_n w_n = g with mollified terminal fields.
CorrectorResult make_correctors(const HomogConfig& config, const std::function<double(double)>& g);

struct ClosedLoopResult {
  int n_max = 0;
  EffectiveKernel kernel;
  CorridorVerdict corridor;
  SolveReport limit_solution;
  double nodal_defect = 0.0;          ///< max over nodal probes of |<u_n - u_0, psi>|
  double nodal_scale = 0.0;           ///< max |<u_n, psi>|
  double flux_defect = 0.0;           ///< max over pair probes of |<xi_n - xi_0, Psi>|
  double flux_scale = 0.0;
  double cross_validation = 0.0;      ///< max relative gap of the two corrector-load estimates on the joint mask
  int filled = 0;                     ///< table entries filled from the nearest masked value
  [[nodiscard]] double relative_nodal_defect() const { return nodal_scale > 0 ? nodal_defect / nodal_scale : 0.0; }
  [[nodiscard]] double relative_flux_defect() const { return flux_scale > 0 ? flux_defect / flux_scale : 0.0; }
};
/// Estimates a_0 from the sweep entry at n_max, solves L_{a_0} u_0 = f and compares with u_{n_max}.
ClosedLoopResult closed_loop_check(const HomogResult& run, int n_max);

}  // namespace fraclab

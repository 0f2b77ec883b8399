#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fraclab/solver.hpp"

namespace fraclab {

/// v -> (1/(2p)) int int a |D v|^p on admissible functions.
class EnergyFunctional {
 public:
  explicit EnergyFunctional(std::shared_ptr<const NonlocalOperator> op) : op_(std::move(op)) {}
  [[nodiscard]] double operator()(const DiscreteFunction& v) const { return op_->energy(v.values()); }
  [[nodiscard]] double operator()(const Eigen::VectorXd& v) const { return op_->energy(v); }
  [[nodiscard]] const NonlocalOperator& op() const { return *op_; }
  [[nodiscard]] const std::shared_ptr<const NonlocalOperator>& op_ptr() const { return op_; }

 private:
  std::shared_ptr<const NonlocalOperator> op_;
};

struct LegendreValue {
  double value = 0.0;         ///< J*(f) = <f,u> - J(u)
  double conjugate_form = 0.0;  ///< (1/p') <f,u>
  double identity_defect = 0.0; ///< |value - conjugate_form|
  double residual = 0.0;
  DiscreteFunction u;
};
/// Conjugate J*(f) = sup_v <f,v> - J(v), attained at the solution of L_a u = f.
LegendreValue legendre(const EnergyFunctional& E, const DualVector& f, const SolverOptions& options = {});

struct FenchelCheck {
  bool passed = true;
  double worst = 0.0;  ///< max over probes of <f,v> - J(v) - J*(f)
};
/// J*(f) >= <f,v> - J(v) for random smooth probes v at random scales.
FenchelCheck fenchel_check(const EnergyFunctional& E, const DualVector& f, double conjugate, int probes,
                           std::uint64_t seed = 5, double tol = 1e-9);

struct LoadEntry {
  std::string name;
  std::function<double(double)> density;
};
/// Twelve loads: polynomials, trigonometric, a bump, a Gaussian and two seeded random trigonometric series.
std::vector<LoadEntry> default_load_dictionary(double half_width = 1.0, std::uint64_t seed = 2024);

struct GammaRow {
  std::string load;
  int n = 0;
  double conjugate = 0.0;  ///< J_n*(f)
  double defect = 0.0;     ///< |J_n*(f) - J_0*(f)|
  double identity_defect = 0.0;  ///< |J_n*(f) - (1/p') <f,u_n>|
};
struct GammaLoadVerdict {
  std::string load;
  double limit_conjugate = 0.0;  ///< J_0*(f)
  double final_defect = 0.0;     ///< defect at n_max
  double relative_defect = 0.0;  ///< final_defect / J_0*(f)
  bool decreasing = false;       ///< defect at n_max below the one at the previous index
  bool passed = false;           ///< relative_defect <= tolerance
};
struct GammaReport {
  std::vector<GammaRow> rows;
  std::vector<GammaLoadVerdict> loads;
  double tolerance = 0.02;
  double max_identity_defect = 0.0;  ///< over the sequence and the limit
  int failures = 0;
  bool passed = false;  ///< "consistent with Gamma-convergence" on this dictionary
};
/// Compares J_n*(f) along the sequence with J_0*(f) for every load. A load passes
/// when its defect at the last index is at most `rel_tol` J_0*(f).
GammaReport gamma_diagnostic(const std::vector<EnergyFunctional>& sequence, const std::vector<int>& n,
                             const EnergyFunctional& limit, const std::vector<LoadEntry>& loads,
                             double rel_tol = 0.02, const SolverOptions& options = {}, int threads = 0);

}  // namespace fraclab

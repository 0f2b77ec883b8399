#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "fraclab/grid.hpp"
#include "fraclab/kernels.hpp"
#include "fraclab/params.hpp"

namespace fraclab {

enum class PairTag { general, gradient, flux };

/// A two-point field phi(x, y) sampled on the full Omega x Omega pair rule.
///
/// values holds 2Q entries: phi at the Q upper points (x < y), then phi at their
/// mirror images (y, x). Interactions with the complement of Omega are carried
/// in closed form by `exterior`: at every point x_e of the domain rule it holds
///   int_{y outside Omega} (phi(x_e, y) - phi(y, x_e)) |x_e - y|^{-alpha} dy,
/// which is all that pairings against (s,p)-gradients of admissible functions
/// ever need. A field without exterior data is treated as vanishing off Omega x Omega.
class PairField {
 public:
  PairField() = default;
  PairField(std::shared_ptr<const PairQuadrature> quad, Eigen::VectorXd values, PairTag tag,
            std::optional<Eigen::VectorXd> exterior = std::nullopt);

  /// Samples phi at every pair point; exterior data is integrated when requested.
  static PairField from_function(std::shared_ptr<const PairQuadrature> quad,
                                 const std::function<double(double, double)>& phi, PairTag tag = PairTag::general,
                                 bool with_exterior = false);
  static PairField zero(std::shared_ptr<const PairQuadrature> quad, PairTag tag = PairTag::general);

  [[nodiscard]] const PairQuadrature& quadrature() const { return *quad_; }
  [[nodiscard]] const std::shared_ptr<const PairQuadrature>& quadrature_ptr() const { return quad_; }
  [[nodiscard]] const Eigen::VectorXd& values() const { return values_; }
  [[nodiscard]] Eigen::VectorXd& values() { return values_; }
  [[nodiscard]] const std::optional<Eigen::VectorXd>& exterior() const { return exterior_; }
  [[nodiscard]] PairTag tag() const { return tag_; }
  [[nodiscard]] std::size_t upper_size() const { return quad_->upper_size(); }
  [[nodiscard]] double upper(std::size_t q) const { return values_[static_cast<Eigen::Index>(q)]; }
  [[nodiscard]] double lower(std::size_t q) const {
    return values_[static_cast<Eigen::Index>(q + quad_->upper_size())];
  }

  /// Largest |phi(x,y) + phi(y,x)| over the rule.
  [[nodiscard]] double antisymmetry_defect() const;
  /// int int phi(x,y) psi(x,y) over Omega x Omega.
  [[nodiscard]] double pair_with(const std::function<double(double, double)>& psi) const;

 private:
  std::shared_ptr<const PairQuadrature> quad_;
  Eigen::VectorXd values_;
  PairTag tag_ = PairTag::general;
  std::optional<Eigen::VectorXd> exterior_;
};

struct OperatorOptions {
  /// Reject kernels whose oscillation index exceeds M / 8.
  bool aliasing_guard = true;
  /// Throw IllPosed if sampled kernel values leave [lambda, Lambda].
  bool check_kernel_bounds = true;
};

/// The discrete nonlocal operator L_a and its energy on one pair rule.
///
/// Everything is expressed through the nodal coefficient vector U of an
/// admissible piecewise-linear function. With Delta_q = u(x_q) - u(y_q),
///   E(U) = (1/p) [ sum_q w_q a_q |Delta_q|^p / r_q^{1+sp} + sum_e w_e K_a(x_e) |u(x_e)|^p ],
/// which equals (1/(2p)) int int_{R x R} a |D u|^p because the stored upper
/// half is one half of Omega x Omega and K_a(x) = int_{outside Omega} a(x,y) |x-y|^{-1-sp} dy
/// accounts for both mixed regions. gradient() is the exact derivative of E.
class NonlocalOperator {
 public:
  NonlocalOperator(std::shared_ptr<const PairQuadrature> quad, Kernel kernel, OperatorOptions options = {});

  [[nodiscard]] const PairQuadrature& quadrature() const { return *quad_; }
  [[nodiscard]] const std::shared_ptr<const PairQuadrature>& quadrature_ptr() const { return quad_; }
  [[nodiscard]] const Grid& grid() const { return quad_->grid(); }
  [[nodiscard]] const std::shared_ptr<const Grid>& grid_ptr() const { return quad_->grid_ptr(); }
  [[nodiscard]] const FracParams& params() const { return quad_->params(); }
  [[nodiscard]] const Kernel& kernel() const { return kernel_; }
  [[nodiscard]] int size() const { return quad_->grid().interior_count(); }
  /// Bounds of the kernel including the normalization constant.
  [[nodiscard]] double lambda() const { return params().normalization * kernel_.lambda(); }
  [[nodiscard]] double Lambda() const { return params().normalization * kernel_.Lambda(); }

  /// u(x_q) - u(y_q) at every upper point.
  [[nodiscard]] Eigen::VectorXd differences(const Eigen::VectorXd& U) const;
  /// u at every domain-rule point.
  [[nodiscard]] Eigen::VectorXd domain_values(const Eigen::VectorXd& U) const;

  /// (1/(2p)) int int a |D u|^p, without load.
  [[nodiscard]] double energy(const Eigen::VectorXd& U) const;
  /// energy(U) - F.U
  [[nodiscard]] double energy(const Eigen::VectorXd& U, const DualVector& f) const {
    return energy(U) - f.values.dot(U);
  }
  /// Nodal dual vector of L_a u: exact gradient of energy().
  [[nodiscard]] Eigen::VectorXd gradient(const Eigen::VectorXd& U) const;
  /// Perturbation of gradient() when every difference carries its floating-point rounding error.
  /// For p < 2 this is the smallest residual resolvable in double precision.
  [[nodiscard]] double gradient_rounding(const Eigen::VectorXd& U) const;
  /// Hessian of energy() with |Delta|^{p-2} replaced by (Delta^2 + reg^2)^{(p-2)/2}.
  /// For p = 2 this is the stiffness matrix and reg is irrelevant.
  [[nodiscard]] Eigen::MatrixXd hessian(const Eigen::VectorXd& U, double reg) const;
  /// Stiffness of the quadratic energy (1/4) int int a |u(x)-u(y)|^2 / |x-y|^{1+sp}
  /// with the same (s,p) weights; used as a warm start and fallback preconditioner.
  [[nodiscard]] const Eigen::MatrixXd& quadratic_stiffness() const;

  /// int int_{R x R} |D u|^p (no kernel, no normalization).
  [[nodiscard]] double seminorm_pow(const Eigen::VectorXd& U) const;
  /// Same integral with |y| > R removed on the exterior side.
  [[nodiscard]] double seminorm_pow_truncated(const Eigen::VectorXd& U) const;
  /// int int_{R x R} |xi|^{p'} for the flux xi = a |D u|^{p-2} D u.
  [[nodiscard]] double flux_norm_pow(const Eigen::VectorXd& U) const;
  /// The flux xi = C a |D u|^{p-2} D u with its exterior data 2 |u|^{p-2} u K_a.
  [[nodiscard]] PairField flux(const Eigen::VectorXd& U) const;

  /// Sampled kernel values (including normalization) at the upper points.
  [[nodiscard]] const std::vector<double>& kernel_values() const { return a_; }

 private:
  std::shared_ptr<const PairQuadrature> quad_;
  Kernel kernel_;
  std::vector<double> a_;       // C a(x_q, y_q)
  std::vector<double> wa_;      // w_q r_q^{-beta} C a_q
  std::vector<double> ext_a_;   // w_e K_{Ca}(x_e)
  std::vector<double> ext_ap_;  // w_e K_{(Ca)^{p'}}(x_e)
  std::vector<double> k_a_;     // K_{Ca}(x_e)
  mutable std::optional<Eigen::MatrixXd> quad_stiffness_;
};

/// (s,p)-gradient (u(x) - u(y)) / |x-y|^{1/p+s}, antisymmetric by construction.
/// Exterior data 2 u(x) int_{outside} |x-y|^{-2 alpha} dy is attached when 2 alpha > 1.
PairField sgrad(const DiscreteFunction& u, std::shared_ptr<const PairQuadrature> quad);

/// (s,p)-divergence with cutoff |x-y| >= eps as a nodal dual vector:
///   v -> int_Omega v(x) int_{|x-y| >= eps} (phi(x,y) - phi(y,x)) |x-y|^{-alpha} dy dx.
/// The exterior data of phi is used as is (it is a regular integral away from the boundary).
DualVector sdiv(const PairField& phi, double eps);

struct ExtrapolatedDivergence {
  DualVector limit;
  /// Cutoff values and the matching dual vectors, coarsest last.
  std::vector<double> eps;
  std::vector<DualVector> samples;
};
/// Richardson extrapolation eps -> 0 from eps in {h, 2h, 4h}; removes O(eps) and O(eps^2) terms.
ExtrapolatedDivergence sdiv_extrapolated(const PairField& phi);

/// Dual vector divided by the lumped mass int phi_i, giving pointwise nodal values.
Eigen::VectorXd dual_to_nodal(const Grid& grid, const DualVector& f);

struct SeminormReport {
  /// [u]_{s,p} over the real line.
  double value = 0.0;
  /// Certified interval for [u]_{s,p}^p: the part inside |y| <= R, and the full value
  /// once the closed-form tail |y| > R is added.
  double truncated_pow = 0.0;
  double full_pow = 0.0;
};
SeminormReport seminorm(const DiscreteFunction& u, const PairQuadrature& quad);

/// J(u) = (1/(2p)) int int a |D u|^p - <f, u>.
double energy(const DiscreteFunction& u, const NonlocalOperator& op, const DualVector& f);
/// Weak form (L_a u)[v] as a nodal dual vector.
DualVector apply_La(const DiscreteFunction& u, const NonlocalOperator& op);

/// |int int phi D u - <d^eps phi, u>| / (1 + |int int phi D u|), both sides with the
/// same cutoff. The left side evaluates u pointwise through the interpolant; the
/// right side assembles the divergence hat by hat.
double ibp_check(const PairField& phi, const DiscreteFunction& u, double eps);
/// Smooth antisymmetric field a (x-y) + sum_k b_k (sin(k x) - sin(k y)) + c (x^2 y - x y^2)
/// + d (x-y) cos(x+y) with seeded N(0,1) coefficients, exterior data attached.
PairField random_antisymmetric_field(std::shared_ptr<const PairQuadrature> quad, std::uint64_t seed);

/// ||u||_{L^p(Omega)} by the domain rule.
double lp_norm(const DiscreteFunction& u, const PairQuadrature& quad);
double lp_norm(const Eigen::VectorXd& U, const PairQuadrature& quad);
/// int_Omega u psi.
double pairing(const DiscreteFunction& u, const std::function<double(double)>& psi, const PairQuadrature& quad);

struct PoincareReport {
  double constant = 0.0;  ///< max ||u||_p / [u]_{s,p} over the probe set
  std::vector<double> ratios;
};
/// Empirical Poincare constant over a fixed probe set of smooth admissible functions.
PoincareReport empirical_poincare(const PairQuadrature& quad);

}  // namespace fraclab

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "fraclab/params.hpp"

namespace fraclab {

/// Omega = (-L, L); integrals over the real line are split at +-R.
struct Domain {
  double half_width = 1.0;
  double truncation_radius = 4.0;
};

/// Uniform nodal grid on Omega with an exterior collar on [-R,-L] and [L,R].
///
/// Interior node i (0-based, i < M) sits at -L + (i+1) h. Cell c in [0, M] spans
/// [-L + c h, -L + (c+1) h] and carries padded nodes c and c+1, where padded
/// nodes 0 and M+1 are the boundary points at which every admissible function
/// vanishes.
class Grid {
 public:
  Grid(Domain domain, int interior_nodes);

  [[nodiscard]] const Domain& domain() const { return domain_; }
  [[nodiscard]] double half_width() const { return domain_.half_width; }
  [[nodiscard]] double truncation_radius() const { return domain_.truncation_radius; }
  [[nodiscard]] int interior_count() const { return m_; }
  [[nodiscard]] int cell_count() const { return m_ + 1; }
  [[nodiscard]] double spacing() const { return h_; }
  [[nodiscard]] double exterior_spacing() const { return exterior_h_; }

  [[nodiscard]] double interior_node(int i) const { return -domain_.half_width + (i + 1) * h_; }
  [[nodiscard]] double cell_left(int c) const { return -domain_.half_width + c * h_; }
  [[nodiscard]] bool in_domain(double x) const { return x > -domain_.half_width && x < domain_.half_width; }

  /// All nodes on [-R, R], strictly increasing.
  [[nodiscard]] const std::vector<double>& nodes() const { return nodes_; }
  /// True for the M nodes inside Omega.
  [[nodiscard]] const std::vector<bool>& interior_mask() const { return mask_; }
  /// Exterior breakpoints on [L, R] (first L, last R); the left collar is the mirror image.
  [[nodiscard]] const std::vector<double>& exterior_breaks() const { return exterior_breaks_; }

 private:
  Domain domain_;
  int m_;
  double h_;
  double exterior_h_;
  std::vector<double> nodes_;
  std::vector<bool> mask_;
  std::vector<double> exterior_breaks_;
};

/// Validating factory: M >= 3 and 0 < L < R.
std::shared_ptr<const Grid> build_grid(double half_width, double truncation_radius, int interior_nodes);

/// Continuous piecewise-linear function on the grid, extended by zero outside Omega.
class DiscreteFunction {
 public:
  DiscreteFunction() = default;
  DiscreteFunction(std::shared_ptr<const Grid> grid, Eigen::VectorXd values);
  static DiscreteFunction zero(std::shared_ptr<const Grid> grid);
  /// Nodal interpolant of f (values at interior nodes only).
  static DiscreteFunction interpolate(std::shared_ptr<const Grid> grid, const std::function<double(double)>& f);

  [[nodiscard]] const Grid& grid() const { return *grid_; }
  [[nodiscard]] const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }
  [[nodiscard]] const Eigen::VectorXd& values() const { return values_; }
  [[nodiscard]] Eigen::VectorXd& values() { return values_; }

  /// Value of the interpolant at x; exactly 0 outside Omega.
  [[nodiscard]] double operator()(double x) const;
  /// Value at padded node k in [0, M+1]; 0 at the boundary nodes.
  [[nodiscard]] double padded(int k) const {
    return (k <= 0 || k > values_.size()) ? 0.0 : values_[k - 1];
  }

 private:
  std::shared_ptr<const Grid> grid_;
  Eigen::VectorXd values_;
};

/// A functional on discrete functions, stored by its action on the interior hat functions.
struct DualVector {
  Eigen::VectorXd values;

  [[nodiscard]] double operator()(const DiscreteFunction& u) const { return values.dot(u.values()); }
  [[nodiscard]] double operator()(const Eigen::VectorXd& u) const { return values.dot(u); }
};

/// One-dimensional rule on Omega: Gauss points per cell, with the two boundary
/// cells graded geometrically toward +-L.
struct DomainRule {
  std::vector<double> x;
  std::vector<double> w;
  std::vector<std::int32_t> cell;
  std::vector<double> xi;
  /// Integral over the complement of Omega of |x-y|^{-(1+sp)} dy (closed form).
  std::vector<double> exterior_weight;
  /// Same integral restricted to |y| > R.
  std::vector<double> tail_weight;

  [[nodiscard]] std::size_t size() const { return x.size(); }
};

/// Load dual vector <f, phi_i> = int f(x) phi_i(x) dx for a density f on Omega.
DualVector load_from_density(const Grid& grid, const DomainRule& rule, const std::function<double(double)>& density);

struct QuadratureOptions {
  int band_points = 3;       ///< Gauss points in t per graded band.
  /// Gauss points along each band; 0 picks 3 for p = 2 and 6 otherwise, since |Delta|^p
  /// has kinks along the bands when p != 2.
  int transverse_points = 0;
  int triangle_points = 4;   ///< Gauss points in t for regular triangles.
  int near_points = 3;       ///< Tensor points per direction for moderately close cell pairs.
  int far_points = 2;        ///< Tensor points per direction for well separated cell pairs.
  int triangle_band = 4;     ///< Cell pairs with |I-J| <= this are split along x-y = const.
  int near_band = 8;         ///< Cell pairs with |I-J| <= this use near_points.
  int domain_points = 4;     ///< Gauss points per cell of the 1-D domain rule.
};

/// Symmetric quadrature for double integrals over Omega x Omega.
///
/// Only the half x < y is stored ("upper" points); the full rule is the union of
/// the upper points and their mirror images (y, x) with identical weights, so
/// swap symmetry is exact. Cell pairs touching the diagonal are parametrised by
/// t = y - x and graded geometrically toward t = 0 with `depth` levels. Every
/// cell pair with |I-J| <= triangle_band is split along the lines x - y = k h,
/// so cutoffs |x-y| >= k h are resolved exactly.
class PairQuadrature {
 public:
  PairQuadrature(std::shared_ptr<const Grid> grid, FracParams params, int depth, QuadratureOptions options = {});

  [[nodiscard]] const Grid& grid() const { return *grid_; }
  [[nodiscard]] const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }
  [[nodiscard]] const FracParams& params() const { return params_; }
  [[nodiscard]] int depth() const { return depth_; }
  [[nodiscard]] const QuadratureOptions& options() const { return options_; }

  /// Number of upper points; the full rule has twice as many.
  [[nodiscard]] std::size_t upper_size() const { return x_.size(); }
  [[nodiscard]] std::size_t full_size() const { return 2 * x_.size(); }

  // Upper-point data (structure of arrays).
  [[nodiscard]] std::span<const std::int32_t> cell_x() const { return cell_x_; }
  [[nodiscard]] std::span<const std::int32_t> cell_y() const { return cell_y_; }
  [[nodiscard]] std::span<const double> xi_x() const { return xi_x_; }
  [[nodiscard]] std::span<const double> xi_y() const { return xi_y_; }
  [[nodiscard]] std::span<const double> x() const { return x_; }
  [[nodiscard]] std::span<const double> y() const { return y_; }
  /// |x - y| > 0, computed from the parametrisation rather than by subtraction.
  [[nodiscard]] std::span<const double> r() const { return r_; }
  [[nodiscard]] std::span<const double> w() const { return w_; }
  /// w / r^{1+sp}
  [[nodiscard]] std::span<const double> singular_weight() const { return ws_; }

  /// Range of upper points belonging to cell pair (I, J), I <= J.
  [[nodiscard]] std::pair<std::size_t, std::size_t> cell_pair_range(int i, int j) const;

  [[nodiscard]] const DomainRule& domain_rule() const { return domain_rule_; }

  /// Sum over the full rule of w * g(x, y, |x-y|).
  [[nodiscard]] double integrate(const std::function<double(double, double, double)>& g) const;

  /// Integral over y outside Omega of g(y) |x-y|^{-(1+sp)} for x in Omega, including |y| > R.
  /// Exact for constant g; graded in y through the substitution t = |y-x|^{-sp}.
  [[nodiscard]] double exterior_integral(double x, const std::function<double(double)>& g) const;
  /// Part of exterior_integral coming from |y| > R.
  [[nodiscard]] double exterior_tail_integral(double x, const std::function<double(double)>& g) const;

 private:
  void build_pairs();
  void build_domain_rule();
  void push_point(int ci, int cj, double xi_x, double xi_y, double x, double y, double r, double w);

  std::shared_ptr<const Grid> grid_;
  FracParams params_;
  int depth_;
  QuadratureOptions options_;

  std::vector<std::int32_t> cell_x_, cell_y_;
  std::vector<double> xi_x_, xi_y_, x_, y_, r_, w_, ws_;
  std::vector<std::size_t> pair_offset_;  // (C*C + 1) entries; pair (I,J) -> I*C + J
  DomainRule domain_rule_;
};

std::shared_ptr<const PairQuadrature> pair_quadrature(std::shared_ptr<const Grid> grid, FracParams params, int depth,
                                                      QuadratureOptions options = {});

/// Integral over |y| > R of |x-y|^{-1-sp}: [(R-x)^{-sp} + (R+x)^{-sp}] / (sp).
double exterior_tail_weight(double x, const Grid& grid, double s, double p);
/// Same integral with R replaced by an arbitrary radius.
double exterior_tail_weight(double x, double radius, double s, double p);

/// Integral over |y| > L of |x-y|^{-gamma}, gamma > 1: [(L-x)^{1-gamma} + (L+x)^{1-gamma}] / (gamma-1).
double complement_weight(double x, double half_width, double gamma);

}  // namespace fraclab

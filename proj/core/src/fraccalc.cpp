#include "fraclab/fraccalc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace fraclab {
namespace {

using Eigen::Index;
using Eigen::VectorXd;

// Adds c * (phi_i(x) - phi_i(y)) to the interior entries of out for one upper point.
inline void scatter_difference(VectorXd& out, int m, int cx, double xx, int cy, double xy, double c) {
  const int nodes[4] = {cx, cx + 1, cy, cy + 1};
  const double coef[4] = {1.0 - xx, xx, -(1.0 - xy), -xy};
  for (int k = 0; k < 4; ++k) {
    const int i = nodes[k] - 1;
    if (i >= 0 && i < m) out[i] += c * coef[k];
  }
}

inline void scatter_value(VectorXd& out, int m, int c, double xi, double v) {
  if (c >= 1) out[c - 1] += (1.0 - xi) * v;
  if (c < m) out[c] += xi * v;
}

inline double padded(const VectorXd& U, int k) {
  return (k <= 0 || k > U.size()) ? 0.0 : U[k - 1];
}

double signed_pow(double v, double e) {
  return v == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(v), e), v);
}

void check_size(const VectorXd& U, int m) {
  if (U.size() != m) throw ValidationError("coefficient vector has wrong size");
}

}  // namespace

// ----------------------------------------------------------------------------
// PairField

PairField::PairField(std::shared_ptr<const PairQuadrature> quad, VectorXd values, PairTag tag,
                     std::optional<VectorXd> exterior)
    : quad_(std::move(quad)), values_(std::move(values)), tag_(tag), exterior_(std::move(exterior)) {
  if (!quad_) throw ValidationError("pair field needs a quadrature");
  if (values_.size() != static_cast<Index>(quad_->full_size())) throw ValidationError("pair field has wrong size");
  if (!values_.allFinite()) throw ValidationError("pair field values must be finite");
  if (exterior_) {
    if (exterior_->size() != static_cast<Index>(quad_->domain_rule().size()))
      throw ValidationError("pair field exterior data has wrong size");
    if (!exterior_->allFinite()) throw ValidationError("pair field exterior data must be finite");
  }
}

PairField PairField::from_function(std::shared_ptr<const PairQuadrature> quad,
                                   const std::function<double(double, double)>& phi, PairTag tag, bool with_exterior) {
  const std::size_t Q = quad->upper_size();
  VectorXd v(static_cast<Index>(2 * Q));
  const auto x = quad->x();
  const auto y = quad->y();
  for (std::size_t q = 0; q < Q; ++q) {
    v[static_cast<Index>(q)] = phi(x[q], y[q]);
    v[static_cast<Index>(q + Q)] = phi(y[q], x[q]);
  }
  std::optional<VectorXd> ext;
  if (with_exterior) {
    const DomainRule& d = quad->domain_rule();
    const double shift = quad->params().beta() - quad->params().alpha();
    VectorXd e(static_cast<Index>(d.size()));
    for (std::size_t k = 0; k < d.size(); ++k) {
      const double xe = d.x[k];
      e[static_cast<Index>(k)] = quad->exterior_integral(
          xe, [&](double yy) { return (phi(xe, yy) - phi(yy, xe)) * std::pow(std::abs(xe - yy), shift); });
    }
    ext = std::move(e);
  }
  return PairField(std::move(quad), std::move(v), tag, std::move(ext));
}

PairField PairField::zero(std::shared_ptr<const PairQuadrature> quad, PairTag tag) {
  const auto n = static_cast<Index>(quad->full_size());
  return PairField(std::move(quad), VectorXd::Zero(n), tag);
}

double PairField::antisymmetry_defect() const {
  double worst = 0.0;
  for (std::size_t q = 0; q < upper_size(); ++q) worst = std::max(worst, std::abs(upper(q) + lower(q)));
  return worst;
}

double PairField::pair_with(const std::function<double(double, double)>& psi) const {
  const auto x = quad_->x();
  const auto y = quad_->y();
  const auto w = quad_->w();
  double sum = 0.0;
  for (std::size_t q = 0; q < upper_size(); ++q) sum += w[q] * (upper(q) * psi(x[q], y[q]) + lower(q) * psi(y[q], x[q]));
  return sum;
}

// ----------------------------------------------------------------------------
// NonlocalOperator

NonlocalOperator::NonlocalOperator(std::shared_ptr<const PairQuadrature> quad, Kernel kernel, OperatorOptions options)
    : quad_(std::move(quad)), kernel_(std::move(kernel)) {
  if (!quad_) throw ValidationError("operator needs a quadrature");
  const Grid& g = quad_->grid();
  const int m = g.interior_count();
  if (options.aliasing_guard && !kernel_.is_constant() && kernel_.frequency() * 8 > m) {
    std::ostringstream msg;
    msg << "kernel oscillation index " << kernel_.frequency() << " exceeds M/8 = " << m / 8
        << "; refine the grid (M >= " << 8 * kernel_.frequency() << ")";
    throw AliasingError(msg.str());
  }
  const FracParams& prm = quad_->params();
  const double C = prm.normalization;
  const double pc = prm.p_conj();
  const double lo = kernel_.lambda() * (1.0 - 1e-12);
  const double hi = kernel_.Lambda() * (1.0 + 1e-12);

  const std::size_t Q = quad_->upper_size();
  const auto x = quad_->x();
  const auto y = quad_->y();
  const auto ws = quad_->singular_weight();
  a_.resize(Q);
  wa_.resize(Q);
  for (std::size_t q = 0; q < Q; ++q) {
    const double a = kernel_(x[q], y[q]);
    if (options.check_kernel_bounds && !(a >= lo && a <= hi)) {
      std::ostringstream msg;
      msg << "kernel '" << kernel_.label() << "' takes value " << a << " at (" << x[q] << ", " << y[q]
          << "), outside its declared bounds [" << kernel_.lambda() << ", " << kernel_.Lambda() << "]";
      throw IllPosed(msg.str());
    }
    a_[q] = C * a;
    wa_[q] = ws[q] * a_[q];
  }

  const DomainRule& d = quad_->domain_rule();
  ext_a_.resize(d.size());
  ext_ap_.resize(d.size());
  k_a_.resize(d.size());
  for (std::size_t e = 0; e < d.size(); ++e) {
    double ka, kap;
    if (kernel_.is_constant()) {
      const double c = C * kernel_.lambda();
      ka = c * d.exterior_weight[e];
      kap = std::pow(c, pc) * d.exterior_weight[e];
    } else {
      const double xe = d.x[e];
      ka = C * quad_->exterior_integral(xe, [&](double yy) { return kernel_(xe, yy); });
      kap = std::pow(C, pc) * quad_->exterior_integral(xe, [&](double yy) { return std::pow(kernel_(xe, yy), pc); });
    }
    k_a_[e] = ka;
    ext_a_[e] = d.w[e] * ka;
    ext_ap_[e] = d.w[e] * kap;
  }
}

VectorXd NonlocalOperator::differences(const VectorXd& U) const {
  check_size(U, size());
  const std::size_t Q = quad_->upper_size();
  const auto cx = quad_->cell_x();
  const auto cy = quad_->cell_y();
  const auto xx = quad_->xi_x();
  const auto xy = quad_->xi_y();
  VectorXd D(static_cast<Index>(Q));
  const auto r = quad_->r();
  const double h = quad_->grid().spacing();
  // Near the diagonal u(x) - u(y) is formed from slopes and offsets to avoid cancellation.
  for (std::size_t q = 0; q < Q; ++q) {
    const int a = cx[q];
    const int b = cy[q];
    double v;
    if (a == b) {
      v = (padded(U, a + 1) - padded(U, a)) * std::copysign(r[q] / h, xx[q] - xy[q]);
    } else if (a == b + 1) {
      v = (padded(U, a + 1) - padded(U, a)) * xx[q] + (padded(U, b + 1) - padded(U, b)) * (1.0 - xy[q]);
    } else if (b == a + 1) {
      v = -((padded(U, b + 1) - padded(U, b)) * xy[q] + (padded(U, a + 1) - padded(U, a)) * (1.0 - xx[q]));
    } else {
      const double ux = (1.0 - xx[q]) * padded(U, a) + xx[q] * padded(U, a + 1);
      const double uy = (1.0 - xy[q]) * padded(U, b) + xy[q] * padded(U, b + 1);
      v = ux - uy;
    }
    D[static_cast<Index>(q)] = v;
  }
  return D;
}

VectorXd NonlocalOperator::domain_values(const VectorXd& U) const {
  check_size(U, size());
  const DomainRule& d = quad_->domain_rule();
  VectorXd v(static_cast<Index>(d.size()));
  for (std::size_t e = 0; e < d.size(); ++e)
    v[static_cast<Index>(e)] = (1.0 - d.xi[e]) * padded(U, d.cell[e]) + d.xi[e] * padded(U, d.cell[e] + 1);
  return v;
}

double NonlocalOperator::energy(const VectorXd& U) const {
  const double p = params().p;
  const VectorXd D = differences(U);
  const VectorXd ue = domain_values(U);
  double s = 0.0;
  for (Index q = 0; q < D.size(); ++q) s += wa_[static_cast<std::size_t>(q)] * std::pow(std::abs(D[q]), p);
  for (Index e = 0; e < ue.size(); ++e) s += ext_a_[static_cast<std::size_t>(e)] * std::pow(std::abs(ue[e]), p);
  return s / p;
}

VectorXd NonlocalOperator::gradient(const VectorXd& U) const {
  const double p = params().p;
  const int m = size();
  const VectorXd D = differences(U);
  const VectorXd ue = domain_values(U);
  const auto cx = quad_->cell_x();
  const auto cy = quad_->cell_y();
  const auto xx = quad_->xi_x();
  const auto xy = quad_->xi_y();
  VectorXd G = VectorXd::Zero(m);
  for (std::size_t q = 0; q < wa_.size(); ++q) {
    const double c = wa_[q] * signed_pow(D[static_cast<Index>(q)], p - 1.0);
    if (c != 0.0) scatter_difference(G, m, cx[q], xx[q], cy[q], xy[q], c);
  }
  const DomainRule& d = quad_->domain_rule();
  for (std::size_t e = 0; e < d.size(); ++e)
    scatter_value(G, m, d.cell[e], d.xi[e], ext_a_[e] * signed_pow(ue[static_cast<Index>(e)], p - 1.0));
  return G;
}

double NonlocalOperator::gradient_rounding(const VectorXd& U) const {
  const double p = params().p;
  const double eps = std::numeric_limits<double>::epsilon();
  const int m = size();
  const VectorXd D = differences(U);
  const VectorXd ue = domain_values(U);
  const auto cx = quad_->cell_x();
  const auto cy = quad_->cell_y();
  const auto xx = quad_->xi_x();
  const auto xy = quad_->xi_y();
  VectorXd G = VectorXd::Zero(m);
  auto add = [&](int c, double xi, double v) {
    if (c - 1 >= 0 && c - 1 < m) G[c - 1] += (1.0 - xi) * v;
    if (c >= 0 && c < m) G[c] += xi * v;
  };
  auto bump = [&](double d, double err) {
    const double a = std::abs(d);
    return std::pow(a + err, p - 1.0) - std::pow(a, p - 1.0);
  };
  for (std::size_t q = 0; q < wa_.size(); ++q) {
    const double d = D[static_cast<Index>(q)];
    // Nodal differences carry an absolute error of order eps |U|, which the offsets then scale.
    const double ua = std::abs(padded(U, cx[q])) + std::abs(padded(U, cx[q] + 1));
    const double ub = std::abs(padded(U, cy[q])) + std::abs(padded(U, cy[q] + 1));
    double err;
    if (cx[q] == cy[q]) {
      err = 4.0 * eps * ua * std::abs(xx[q] - xy[q]);
    } else {
      err = 4.0 * eps * (ua + ub);
    }
    const double c = std::abs(wa_[q]) * bump(d, err);
    add(cx[q], xx[q], c);
    add(cy[q], xy[q], c);
  }
  const DomainRule& dr = quad_->domain_rule();
  for (std::size_t e = 0; e < dr.size(); ++e) {
    const double v = ue[static_cast<Index>(e)];
    add(dr.cell[e], dr.xi[e], std::abs(ext_a_[e]) * bump(v, 4.0 * eps * std::abs(v)));
  }
  return G.norm();
}

namespace {

// Accumulates sum_q c_q g_q g_q^T into H, g_q = (phi_i(x_q) - phi_i(y_q))_i.
void add_pair_outer(Eigen::MatrixXd& H, int m, int cx, double xx, int cy, double xy, double c) {
  const int nodes[4] = {cx - 1, cx, cy - 1, cy};
  const double coef[4] = {1.0 - xx, xx, -(1.0 - xy), -xy};
  for (int a = 0; a < 4; ++a) {
    const int i = nodes[a];
    if (i < 0 || i >= m) continue;
    const double ca = c * coef[a];
    for (int b = 0; b < 4; ++b) {
      const int j = nodes[b];
      if (j < 0 || j >= m) continue;
      H(i, j) += ca * coef[b];
    }
  }
}

void add_point_outer(Eigen::MatrixXd& H, int m, int c, double xi, double v) {
  const int nodes[2] = {c - 1, c};
  const double coef[2] = {1.0 - xi, xi};
  for (int a = 0; a < 2; ++a) {
    if (nodes[a] < 0 || nodes[a] >= m) continue;
    for (int b = 0; b < 2; ++b) {
      if (nodes[b] < 0 || nodes[b] >= m) continue;
      H(nodes[a], nodes[b]) += v * coef[a] * coef[b];
    }
  }
}

}  // namespace

Eigen::MatrixXd NonlocalOperator::hessian(const VectorXd& U, double reg) const {
  const double p = params().p;
  const int m = size();
  const bool quad = params().quadratic();
  const auto cx = quad_->cell_x();
  const auto cy = quad_->cell_y();
  const auto xx = quad_->xi_x();
  const auto xy = quad_->xi_y();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, m);
  VectorXd D, ue;
  if (!quad) {
    D = differences(U);
    ue = domain_values(U);
  }
  const double r2 = reg * reg;
  for (std::size_t q = 0; q < wa_.size(); ++q) {
    double c = wa_[q];
    if (!quad) {
      const double d = D[static_cast<Index>(q)];
      c *= (p - 1.0) * std::pow(d * d + r2, 0.5 * (p - 2.0));
    }
    add_pair_outer(H, m, cx[q], xx[q], cy[q], xy[q], c);
  }
  const DomainRule& d = quad_->domain_rule();
  for (std::size_t e = 0; e < d.size(); ++e) {
    double c = ext_a_[e];
    if (!quad) {
      const double v = ue[static_cast<Index>(e)];
      c *= (p - 1.0) * std::pow(v * v + r2, 0.5 * (p - 2.0));
    }
    add_point_outer(H, m, d.cell[e], d.xi[e], c);
  }
  return H;
}

const Eigen::MatrixXd& NonlocalOperator::quadratic_stiffness() const {
  if (!quad_stiffness_) {
    const int m = size();
    const auto cx = quad_->cell_x();
    const auto cy = quad_->cell_y();
    const auto xx = quad_->xi_x();
    const auto xy = quad_->xi_y();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t q = 0; q < wa_.size(); ++q) add_pair_outer(H, m, cx[q], xx[q], cy[q], xy[q], wa_[q]);
    const DomainRule& d = quad_->domain_rule();
    for (std::size_t e = 0; e < d.size(); ++e) add_point_outer(H, m, d.cell[e], d.xi[e], ext_a_[e]);
    quad_stiffness_ = std::move(H);
  }
  return *quad_stiffness_;
}

double NonlocalOperator::seminorm_pow(const VectorXd& U) const {
  const double p = params().p;
  const VectorXd D = differences(U);
  const VectorXd ue = domain_values(U);
  const auto ws = quad_->singular_weight();
  const DomainRule& d = quad_->domain_rule();
  double s = 0.0;
  for (Index q = 0; q < D.size(); ++q) s += ws[static_cast<std::size_t>(q)] * std::pow(std::abs(D[q]), p);
  for (std::size_t e = 0; e < d.size(); ++e)
    s += d.w[e] * d.exterior_weight[e] * std::pow(std::abs(ue[static_cast<Index>(e)]), p);
  return 2.0 * s;
}

double NonlocalOperator::seminorm_pow_truncated(const VectorXd& U) const {
  const double p = params().p;
  const VectorXd ue = domain_values(U);
  const DomainRule& d = quad_->domain_rule();
  double tail = 0.0;
  for (std::size_t e = 0; e < d.size(); ++e)
    tail += d.w[e] * d.tail_weight[e] * std::pow(std::abs(ue[static_cast<Index>(e)]), p);
  return seminorm_pow(U) - 2.0 * tail;
}

double NonlocalOperator::flux_norm_pow(const VectorXd& U) const {
  const double p = params().p;
  const double pc = params().p_conj();
  const VectorXd D = differences(U);
  const VectorXd ue = domain_values(U);
  const auto ws = quad_->singular_weight();
  double s = 0.0;
  for (Index q = 0; q < D.size(); ++q) {
    const auto k = static_cast<std::size_t>(q);
    s += ws[k] * std::pow(a_[k], pc) * std::pow(std::abs(D[q]), p);
  }
  for (Index e = 0; e < ue.size(); ++e) s += ext_ap_[static_cast<std::size_t>(e)] * std::pow(std::abs(ue[e]), p);
  return 2.0 * s;
}

PairField NonlocalOperator::flux(const VectorXd& U) const {
  const double p = params().p;
  const double alpha = params().alpha();
  const VectorXd D = differences(U);
  const VectorXd ue = domain_values(U);
  const auto r = quad_->r();
  const std::size_t Q = quad_->upper_size();
  VectorXd v(static_cast<Index>(2 * Q));
  for (std::size_t q = 0; q < Q; ++q) {
    const double du = D[static_cast<Index>(q)] * std::pow(r[q], -alpha);
    const double xi = a_[q] * signed_pow(du, p - 1.0);
    v[static_cast<Index>(q)] = xi;
    v[static_cast<Index>(q + Q)] = -xi;
  }
  VectorXd ext(ue.size());
  for (Index e = 0; e < ue.size(); ++e) ext[e] = 2.0 * signed_pow(ue[e], p - 1.0) * k_a_[static_cast<std::size_t>(e)];
  return PairField(quad_, std::move(v), PairTag::flux, std::move(ext));
}

// ----------------------------------------------------------------------------
// Free functions

PairField sgrad(const DiscreteFunction& u, std::shared_ptr<const PairQuadrature> quad) {
  if (&u.grid() != &quad->grid()) throw ValidationError("function and quadrature live on different grids");
  const VectorXd& U = u.values();
  const double alpha = quad->params().alpha();
  const std::size_t Q = quad->upper_size();
  const auto cx = quad->cell_x();
  const auto cy = quad->cell_y();
  const auto xx = quad->xi_x();
  const auto xy = quad->xi_y();
  const auto r = quad->r();
  VectorXd v(static_cast<Index>(2 * Q));
  for (std::size_t q = 0; q < Q; ++q) {
    const double ux = (1.0 - xx[q]) * padded(U, cx[q]) + xx[q] * padded(U, cx[q] + 1);
    const double uy = (1.0 - xy[q]) * padded(U, cy[q]) + xy[q] * padded(U, cy[q] + 1);
    const double g = (ux - uy) * std::pow(r[q], -alpha);
    v[static_cast<Index>(q)] = g;
    v[static_cast<Index>(q + Q)] = -g;
  }
  std::optional<VectorXd> ext;
  if (2.0 * alpha > 1.0) {
    const DomainRule& d = quad->domain_rule();
    const double L = quad->grid().half_width();
    VectorXd e(static_cast<Index>(d.size()));
    for (std::size_t k = 0; k < d.size(); ++k) {
      const double ue = (1.0 - d.xi[k]) * padded(U, d.cell[k]) + d.xi[k] * padded(U, d.cell[k] + 1);
      e[static_cast<Index>(k)] = 2.0 * ue * complement_weight(d.x[k], L, 2.0 * alpha);
    }
    ext = std::move(e);
  }
  return PairField(std::move(quad), std::move(v), PairTag::gradient, std::move(ext));
}

DualVector sdiv(const PairField& phi, double eps) {
  const PairQuadrature& quad = phi.quadrature();
  const Grid& g = quad.grid();
  if (!(eps >= 0.5 * g.spacing() * (1.0 - 1e-12)))
    throw ValidationError("divergence cutoff eps must be at least h/2 (sub-grid cutoffs are meaningless)");
  const int m = g.interior_count();
  const double alpha = quad.params().alpha();
  const auto cx = quad.cell_x();
  const auto cy = quad.cell_y();
  const auto xx = quad.xi_x();
  const auto xy = quad.xi_y();
  const auto r = quad.r();
  const auto w = quad.w();
  const double cut = eps * (1.0 - 1e-12);
  VectorXd out = VectorXd::Zero(m);
  for (std::size_t q = 0; q < phi.upper_size(); ++q) {
    if (r[q] < cut) continue;
    const double c = w[q] * (phi.upper(q) - phi.lower(q)) * std::pow(r[q], -alpha);
    scatter_difference(out, m, cx[q], xx[q], cy[q], xy[q], c);
  }
  if (phi.exterior()) {
    const DomainRule& d = quad.domain_rule();
    const VectorXd& ext = *phi.exterior();
    for (std::size_t e = 0; e < d.size(); ++e) scatter_value(out, m, d.cell[e], d.xi[e], d.w[e] * ext[static_cast<Index>(e)]);
  }
  return DualVector{std::move(out)};
}

ExtrapolatedDivergence sdiv_extrapolated(const PairField& phi) {
  const double h = phi.quadrature().grid().spacing();
  ExtrapolatedDivergence out;
  out.eps = {h, 2.0 * h, 4.0 * h};
  for (double e : out.eps) out.samples.push_back(sdiv(phi, e));
  out.limit.values = (8.0 * out.samples[0].values - 6.0 * out.samples[1].values + out.samples[2].values) / 3.0;
  return out;
}

VectorXd dual_to_nodal(const Grid& grid, const DualVector& f) { return f.values / grid.spacing(); }

SeminormReport seminorm(const DiscreteFunction& u, const PairQuadrature& quad) {
  const NonlocalOperator op(std::shared_ptr<const PairQuadrature>(&quad, [](const PairQuadrature*) {}),
                            constant_kernel(1.0), OperatorOptions{false, false});
  SeminormReport rep;
  rep.full_pow = op.seminorm_pow(u.values());
  rep.truncated_pow = op.seminorm_pow_truncated(u.values());
  rep.value = std::pow(rep.full_pow, 1.0 / quad.params().p);
  return rep;
}

double energy(const DiscreteFunction& u, const NonlocalOperator& op, const DualVector& f) {
  return op.energy(u.values(), f);
}

DualVector apply_La(const DiscreteFunction& u, const NonlocalOperator& op) { return DualVector{op.gradient(u.values())}; }

double ibp_check(const PairField& phi, const DiscreteFunction& u, double eps) {
  const PairQuadrature& quad = phi.quadrature();
  const double alpha = quad.params().alpha();
  const auto x = quad.x();
  const auto y = quad.y();
  const auto r = quad.r();
  const auto w = quad.w();
  const double cut = eps * (1.0 - 1e-12);
  double lhs = 0.0;
  for (std::size_t q = 0; q < phi.upper_size(); ++q) {
    if (r[q] < cut) continue;
    const double ux = u(x[q]);
    const double uy = u(y[q]);
    const double inv = std::pow(r[q], -alpha);
    lhs += w[q] * (phi.upper(q) * (ux - uy) * inv + phi.lower(q) * (uy - ux) * inv);
  }
  if (phi.exterior()) {
    const DomainRule& d = quad.domain_rule();
    for (std::size_t e = 0; e < d.size(); ++e) lhs += d.w[e] * u(d.x[e]) * (*phi.exterior())[static_cast<Index>(e)];
  }
  const double rhs = sdiv(phi, eps)(u);
  return std::abs(lhs - rhs) / (1.0 + std::abs(lhs));
}

double lp_norm(const VectorXd& U, const PairQuadrature& quad) {
  const DomainRule& d = quad.domain_rule();
  const double p = quad.params().p;
  double s = 0.0;
  for (std::size_t e = 0; e < d.size(); ++e) {
    const double v = (1.0 - d.xi[e]) * padded(U, d.cell[e]) + d.xi[e] * padded(U, d.cell[e] + 1);
    s += d.w[e] * std::pow(std::abs(v), p);
  }
  return std::pow(s, 1.0 / p);
}

double lp_norm(const DiscreteFunction& u, const PairQuadrature& quad) { return lp_norm(u.values(), quad); }

double pairing(const DiscreteFunction& u, const std::function<double(double)>& psi, const PairQuadrature& quad) {
  const DomainRule& d = quad.domain_rule();
  const VectorXd& U = u.values();
  double s = 0.0;
  for (std::size_t e = 0; e < d.size(); ++e) {
    const double v = (1.0 - d.xi[e]) * padded(U, d.cell[e]) + d.xi[e] * padded(U, d.cell[e] + 1);
    s += d.w[e] * v * psi(d.x[e]);
  }
  return s;
}

PairField random_antisymmetric_field(std::shared_ptr<const PairQuadrature> quad, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const double a = nd(rng), c = nd(rng), d = nd(rng);
  std::array<double, 3> b{nd(rng), nd(rng), nd(rng)};
  const double L = quad->grid().half_width();
  return PairField::from_function(
      std::move(quad),
      [=](double x, double y) {
        const double X = x / L, Y = y / L;
        double v = a * (X - Y) + c * (X * X * Y - X * Y * Y) + d * (X - Y) * std::cos(X + Y);
        for (int k = 0; k < 3; ++k) v += b[static_cast<std::size_t>(k)] * (std::sin((k + 1) * X) - std::sin((k + 1) * Y));
        return v;
      },
      PairTag::general, true);
}

PoincareReport empirical_poincare(const PairQuadrature& quad) {
  const double L = quad.grid().half_width();
  constexpr double pi = std::numbers::pi;
  std::vector<std::function<double(double)>> probes;
  for (int k = 1; k <= 4; ++k) probes.emplace_back([=](double x) { return std::sin(k * pi * (x + L) / (2.0 * L)); });
  probes.emplace_back([=](double x) { return L * L - x * x; });
  probes.emplace_back([=](double x) { return std::sqrt(std::max(0.0, L * L - x * x)); });
  probes.emplace_back([=](double x) { return L - std::abs(x); });
  probes.emplace_back([=](double x) { return x * (L * L - x * x); });
  PoincareReport rep;
  for (const auto& f : probes) {
    const auto u = DiscreteFunction::interpolate(quad.grid_ptr(), f);
    const double semi = seminorm(u, quad).value;
    const double ratio = lp_norm(u, quad) / semi;
    rep.ratios.push_back(ratio);
    rep.constant = std::max(rep.constant, ratio);
  }
  return rep;
}

}  // namespace fraclab

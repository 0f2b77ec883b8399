#include "fraclab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fraclab/gauss.hpp"

namespace fraclab {

Grid::Grid(Domain domain, int interior_nodes) : domain_(domain), m_(interior_nodes) {
  const double L = domain_.half_width;
  const double R = domain_.truncation_radius;
  if (interior_nodes < 3) throw ValidationError("grid needs M >= 3 interior nodes, got " + std::to_string(interior_nodes));
  if (!(L > 0.0)) throw ValidationError("half width L must be positive");
  if (!(R > L)) {
    std::ostringstream msg;
    msg << "truncation radius R must exceed L (R=" << R << ", L=" << L << ")";
    throw ValidationError(msg.str());
  }
  h_ = 2.0 * L / (m_ + 1);
  // Collar cells of width <= h; snapping avoids a sliver cell when (R-L)/h is an integer.
  const int n_ext = std::max(1, static_cast<int>(std::ceil((R - L) / h_ - 1e-9)));
  exterior_h_ = (R - L) / n_ext;
  exterior_breaks_.resize(n_ext + 1);
  for (int k = 0; k <= n_ext; ++k) exterior_breaks_[k] = (k == n_ext) ? R : L + k * exterior_h_;

  nodes_.reserve(2 * n_ext + m_ + 2);
  for (int k = n_ext; k >= 1; --k) nodes_.push_back(-exterior_breaks_[k]);
  nodes_.push_back(-L);
  for (int i = 0; i < m_; ++i) nodes_.push_back(interior_node(i));
  nodes_.push_back(L);
  for (int k = 1; k <= n_ext; ++k) nodes_.push_back(exterior_breaks_[k]);
  mask_.assign(nodes_.size(), false);
  for (int i = 0; i < m_; ++i) mask_[n_ext + 1 + i] = true;
}

std::shared_ptr<const Grid> build_grid(double half_width, double truncation_radius, int interior_nodes) {
  return std::make_shared<const Grid>(Domain{half_width, truncation_radius}, interior_nodes);
}

// ---------------------------------------------------------------------------

DiscreteFunction::DiscreteFunction(std::shared_ptr<const Grid> grid, Eigen::VectorXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw ValidationError("discrete function needs a grid");
  if (values_.size() != grid_->interior_count())
    throw ValidationError("discrete function has " + std::to_string(values_.size()) + " values, grid has " +
                          std::to_string(grid_->interior_count()) + " interior nodes");
  if (!values_.allFinite()) throw ValidationError("discrete function values must be finite");
}

DiscreteFunction DiscreteFunction::zero(std::shared_ptr<const Grid> grid) {
  const int m = grid->interior_count();
  return {std::move(grid), Eigen::VectorXd::Zero(m)};
}

DiscreteFunction DiscreteFunction::interpolate(std::shared_ptr<const Grid> grid,
                                               const std::function<double(double)>& f) {
  Eigen::VectorXd v(grid->interior_count());
  for (int i = 0; i < v.size(); ++i) v[i] = f(grid->interior_node(i));
  return {std::move(grid), std::move(v)};
}

double DiscreteFunction::operator()(double x) const {
  const Grid& g = *grid_;
  if (!g.in_domain(x)) return 0.0;
  const double h = g.spacing();
  double pos = (x + g.half_width()) / h;
  int c = std::clamp(static_cast<int>(std::floor(pos)), 0, g.cell_count() - 1);
  const double xi = pos - c;
  return (1.0 - xi) * padded(c) + xi * padded(c + 1);
}

// ---------------------------------------------------------------------------

double exterior_tail_weight(double x, double radius, double s, double p) {
  const double sp = s * p;
  return (std::pow(radius - x, -sp) + std::pow(radius + x, -sp)) / sp;
}

double exterior_tail_weight(double x, const Grid& grid, double s, double p) {
  return exterior_tail_weight(x, grid.truncation_radius(), s, p);
}

double complement_weight(double x, double half_width, double gamma) {
  const double e = 1.0 - gamma;
  return (std::pow(half_width - x, e) + std::pow(half_width + x, e)) / (gamma - 1.0);
}

DualVector load_from_density(const Grid& grid, const DomainRule& rule, const std::function<double(double)>& density) {
  DualVector f{Eigen::VectorXd::Zero(grid.interior_count())};
  const int m = grid.interior_count();
  for (std::size_t e = 0; e < rule.size(); ++e) {
    const double val = density(rule.x[e]) * rule.w[e];
    const int c = rule.cell[e];
    const double xi = rule.xi[e];
    if (c >= 1) f.values[c - 1] += (1.0 - xi) * val;
    if (c < m) f.values[c] += xi * val;
  }
  if (!f.values.allFinite()) throw ValidationError("load density produced non-finite values");
  return f;
}

// ---------------------------------------------------------------------------

namespace {

struct Rule1D {
  std::vector<double> t;
  std::vector<double> w;
};

// Gauss points on [0, h] graded toward 0: geometric bands plus a polynomially
// substituted innermost band that absorbs a t^gamma endpoint behaviour.
Rule1D graded_rule(double h, int depth, int points, double gamma) {
  const GaussRule& g = gauss_legendre(points);
  Rule1D out;
  for (int j = 0; j < depth; ++j) {
    const double hi = h * std::ldexp(1.0, -j);
    const double lo = 0.5 * hi;
    for (int k = 0; k < g.size(); ++k) {
      out.t.push_back(lo + (hi - lo) * g.nodes[k]);
      out.w.push_back((hi - lo) * g.weights[k]);
    }
  }
  const double e = h * std::ldexp(1.0, -depth);
  const double q = std::max(1.0, 2.0 / (gamma + 1.0));
  for (int k = 0; k < g.size(); ++k) {
    const double v = g.nodes[k];
    out.t.push_back(e * std::pow(v, q));
    out.w.push_back(e * q * std::pow(v, q - 1.0) * g.weights[k]);
  }
  return out;
}

Rule1D plain_rule(double lo, double hi, int points) {
  const GaussRule& g = gauss_legendre(points);
  Rule1D out;
  for (int k = 0; k < g.size(); ++k) {
    out.t.push_back(lo + (hi - lo) * g.nodes[k]);
    out.w.push_back((hi - lo) * g.weights[k]);
  }
  return out;
}

}  // namespace

PairQuadrature::PairQuadrature(std::shared_ptr<const Grid> grid, FracParams params, int depth,
                               QuadratureOptions options)
    : grid_(std::move(grid)), params_(params), depth_(depth), options_(options) {
  if (!grid_) throw ValidationError("pair quadrature needs a grid");
  params_.validate();
  if (depth_ < 1) throw ValidationError("diagonal refinement depth must be >= 1");
  if (options_.triangle_band < 1) throw ValidationError("triangle band must be >= 1");
  build_pairs();
  build_domain_rule();
}

void PairQuadrature::push_point(int ci, int cj, double xi_x, double xi_y, double x, double y, double r, double w) {
  cell_x_.push_back(ci);
  cell_y_.push_back(cj);
  xi_x_.push_back(xi_x);
  xi_y_.push_back(xi_y);
  x_.push_back(x);
  y_.push_back(y);
  r_.push_back(r);
  w_.push_back(w);
  ws_.push_back(w * std::pow(r, -params_.beta()));
}

void PairQuadrature::build_pairs() {
  const Grid& g = *grid_;
  const int C = g.cell_count();
  const double h = g.spacing();
  const double gamma = params_.p - 1.0 - params_.s * params_.p;
  const Rule1D graded = graded_rule(h, depth_, options_.band_points, gamma);
  const int transverse = options_.transverse_points > 0 ? options_.transverse_points : (params_.quadratic() ? 3 : 6);
  const GaussRule& gx = gauss_legendre(transverse);
  const Rule1D tri_unit = plain_rule(0.0, h, options_.triangle_points);
  const GaussRule& g_near = gauss_legendre(options_.near_points);
  const GaussRule& g_far = gauss_legendre(options_.far_points);

  pair_offset_.assign(static_cast<std::size_t>(C) * C + 1, 0);

  // Lower triangle of cell pair (I, I+k): t in [(k-1)h, kh], tau = t - (k-1)h.
  auto lower = [&](int I, int k, const Rule1D& taus) {
    const double a = g.cell_left(I);
    for (std::size_t it = 0; it < taus.t.size(); ++it) {
      const double tau = taus.t[it];
      const double t = (k - 1) * h + tau;
      for (int m = 0; m < gx.size(); ++m) {
        const double xi = gx.nodes[m];
        const double x = a + h - tau * xi;
        push_point(I, I + k, 1.0 - tau * xi / h, tau * (1.0 - xi) / h, x, x + t, t, taus.w[it] * gx.weights[m] * tau);
      }
    }
  };
  // Upper triangle of cell pair (I, I+k): t in [kh, (k+1)h], sigma = (k+1)h - t.
  auto upper = [&](int I, int k, const Rule1D& ts, bool ts_is_offset) {
    const double a = g.cell_left(I);
    for (std::size_t it = 0; it < ts.t.size(); ++it) {
      // For k = 0 the graded rule is given in t directly; otherwise in t - kh.
      const double t = ts_is_offset ? k * h + ts.t[it] : ts.t[it];
      const double sigma = (k + 1) * h - t;
      for (int m = 0; m < gx.size(); ++m) {
        const double xi = gx.nodes[m];
        const double x = a + sigma * xi;
        push_point(I, I + k, sigma * xi / h, 1.0 - sigma * (1.0 - xi) / h, x, x + t, t,
                   ts.w[it] * gx.weights[m] * sigma);
      }
    }
  };
  auto tensor = [&](int I, int J, const GaussRule& gr) {
    const double a = g.cell_left(I);
    const double b = g.cell_left(J);
    for (int i = 0; i < gr.size(); ++i) {
      for (int j = 0; j < gr.size(); ++j) {
        const double x = a + h * gr.nodes[i];
        const double y = b + h * gr.nodes[j];
        const double r = (J - I) * h + h * (gr.nodes[j] - gr.nodes[i]);
        push_point(I, J, gr.nodes[i], gr.nodes[j], x, y, r, h * h * gr.weights[i] * gr.weights[j]);
      }
    }
  };

  for (int I = 0; I < C; ++I) {
    for (int J = I; J < C; ++J) {
      pair_offset_[static_cast<std::size_t>(I) * C + J] = x_.size();
      const int k = J - I;
      if (k == 0) {
        upper(I, 0, graded, false);
      } else if (k <= options_.triangle_band) {
        lower(I, k, k == 1 ? graded : tri_unit);
        upper(I, k, tri_unit, true);
      } else {
        tensor(I, J, k <= options_.near_band ? g_near : g_far);
      }
    }
  }
  pair_offset_[static_cast<std::size_t>(C) * C] = x_.size();
}

std::pair<std::size_t, std::size_t> PairQuadrature::cell_pair_range(int i, int j) const {
  const int C = grid_->cell_count();
  if (i > j) std::swap(i, j);
  const std::size_t begin = pair_offset_[static_cast<std::size_t>(i) * C + j];
  std::size_t end;
  if (j + 1 < C) {
    end = pair_offset_[static_cast<std::size_t>(i) * C + j + 1];
  } else if (i + 1 < C) {
    end = pair_offset_[static_cast<std::size_t>(i + 1) * C + i + 1];
  } else {
    end = x_.size();
  }
  return {begin, end};
}

void PairQuadrature::build_domain_rule() {
  const Grid& g = *grid_;
  const double h = g.spacing();
  const double L = g.half_width();
  const int C = g.cell_count();
  const GaussRule& gr = gauss_legendre(options_.domain_points);
  DomainRule& d = domain_rule_;
  auto push = [&](int c, double x, double w) {
    d.x.push_back(x);
    d.w.push_back(w);
    d.cell.push_back(c);
    d.xi.push_back((x - g.cell_left(c)) / h);
    d.exterior_weight.push_back(complement_weight(x, L, params_.beta()));
    d.tail_weight.push_back(exterior_tail_weight(x, g, params_.s, params_.p));
  };
  // Boundary cells graded toward the boundary point.
  const Rule1D graded = [&] {
    Rule1D r;
    for (int j = 0; j < depth_; ++j) {
      const double hi = h * std::ldexp(1.0, -j);
      const Rule1D band = plain_rule(0.5 * hi, hi, options_.domain_points);
      r.t.insert(r.t.end(), band.t.begin(), band.t.end());
      r.w.insert(r.w.end(), band.w.begin(), band.w.end());
    }
    const Rule1D last = plain_rule(0.0, h * std::ldexp(1.0, -depth_), options_.domain_points);
    r.t.insert(r.t.end(), last.t.begin(), last.t.end());
    r.w.insert(r.w.end(), last.w.begin(), last.w.end());
    return r;
  }();
  for (int c = 0; c < C; ++c) {
    const double a = g.cell_left(c);
    if (c == 0) {
      for (std::size_t k = 0; k < graded.t.size(); ++k) push(c, a + graded.t[k], graded.w[k]);
    } else if (c == C - 1) {
      for (std::size_t k = 0; k < graded.t.size(); ++k) push(c, a + h - graded.t[k], graded.w[k]);
    } else {
      for (int k = 0; k < gr.size(); ++k) push(c, a + h * gr.nodes[k], h * gr.weights[k]);
    }
  }
}

double PairQuadrature::integrate(const std::function<double(double, double, double)>& g) const {
  double sum = 0.0;
  for (std::size_t q = 0; q < x_.size(); ++q) sum += w_[q] * (g(x_[q], y_[q], r_[q]) + g(y_[q], x_[q], r_[q]));
  return sum;
}

namespace {

// (1/sp) * int_{t_lo}^{t_hi} g(y(t)) dt on one piece, y = x +- t^{-1/sp}.
double substituted_piece(double x, double d_near, double d_far, double sign, double sp, int points,
                         const std::function<double(double)>& g) {
  const GaussRule& gr = gauss_legendre(points);
  const double t_hi = std::pow(d_near, -sp);
  const double t_lo = std::isinf(d_far) ? 0.0 : std::pow(d_far, -sp);
  double sum = 0.0;
  for (int k = 0; k < gr.size(); ++k) {
    const double t = t_lo + (t_hi - t_lo) * gr.nodes[k];
    const double dist = std::pow(t, -1.0 / sp);
    sum += gr.weights[k] * g(x + sign * dist);
  }
  return sum * (t_hi - t_lo) / sp;
}

}  // namespace

double PairQuadrature::exterior_integral(double x, const std::function<double(double)>& g) const {
  const auto& breaks = grid_->exterior_breaks();
  const double sp = params_.s * params_.p;
  double sum = 0.0;
  const std::size_t pieces = breaks.size() - 1;
  for (std::size_t k = 0; k < pieces; ++k) {
    const int pts = k < 4 ? 4 : 2;
    sum += substituted_piece(x, breaks[k] - x, breaks[k + 1] - x, +1.0, sp, pts, g);
    sum += substituted_piece(x, breaks[k] + x, breaks[k + 1] + x, -1.0, sp, pts, g);
  }
  return sum + exterior_tail_integral(x, g);
}

double PairQuadrature::exterior_tail_integral(double x, const std::function<double(double)>& g) const {
  const double R = grid_->truncation_radius();
  const double sp = params_.s * params_.p;
  const double inf = std::numeric_limits<double>::infinity();
  return substituted_piece(x, R - x, inf, +1.0, sp, 4, g) + substituted_piece(x, R + x, inf, -1.0, sp, 4, g);
}

std::shared_ptr<const PairQuadrature> pair_quadrature(std::shared_ptr<const Grid> grid, FracParams params, int depth,
                                                      QuadratureOptions options) {
  return std::make_shared<const PairQuadrature>(std::move(grid), params, depth, options);
}

}  // namespace fraclab

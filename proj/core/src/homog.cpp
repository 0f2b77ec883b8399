#include "fraclab/homog.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fraclab/parallel.hpp"

namespace fraclab {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double smooth_bump(double z) {
  const double d = 1.0 - z * z;
  return d <= 0.0 ? 0.0 : std::exp(1.0 - 1.0 / d);
}

ProbeDictionary default_probes(double L) {
  constexpr double pi = std::numbers::pi;
  ProbeDictionary d;
  auto nodal = [&](std::string name, std::function<double(double)> f) {
    d.nodal_names.push_back(std::move(name));
    d.nodal.push_back(std::move(f));
  };
  nodal("cos_half_pi", [=](double x) { return std::cos(0.5 * pi * x / L); });
  nodal("sin_pi", [=](double x) { return std::sin(pi * x / L); });
  nodal("cos_three_half_pi", [=](double x) { return std::cos(1.5 * pi * x / L); });
  nodal("parabola", [=](double x) { return 1.0 - (x / L) * (x / L); });
  nodal("cubic", [=](double x) { return (x / L) * (1.0 - (x / L) * (x / L)); });
  nodal("gauss", [=](double x) { return std::exp(-4.0 * (x / L) * (x / L)); });
  nodal("one", [](double) { return 1.0; });
  nodal("sin_half_pi", [=](double x) { return std::sin(0.5 * pi * x / L); });

  const double rho = 0.25 * L;
  const double centers[4][2] = {{-0.5, 0.3}, {0.2, -0.6}, {0.55, -0.1}, {-0.15, 0.6}};
  for (const auto& c : centers) {
    const double x0 = c[0] * L;
    const double y0 = c[1] * L;
    std::ostringstream name;
    name << "bump(" << c[0] << "," << c[1] << ")";
    d.pair_names.push_back(name.str());
    d.pair.emplace_back([=](double x, double y) { return smooth_bump((x - x0) / rho) * smooth_bump((y - y0) / rho); });
  }
  return d;
}

// ----------------------------------------------------------------------------
// Mollifiers

VectorXd mollify_samples(const VectorXd& samples, double spacing, double delta, bool periodic) {
  if (!(spacing > 0.0) || !(delta >= 2.0 * spacing * (1.0 - 1e-12)))
    throw ValidationError("mollifier width delta must be at least two grid spacings");
  const int half = static_cast<int>(std::floor(0.5 * delta / spacing));
  std::vector<double> w(static_cast<std::size_t>(2 * half + 1));
  double total = 0.0;
  for (int j = -half; j <= half; ++j) {
    const double v = smooth_bump(2.0 * j * spacing / delta);
    w[static_cast<std::size_t>(j + half)] = v;
    total += v;
  }
  for (double& v : w) v /= total;
  const auto n = static_cast<int>(samples.size());
  VectorXd out = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = -half; j <= half; ++j) {
      int k = i + j;
      if (periodic) {
        k = ((k % n) + n) % n;
      } else if (k < 0 || k >= n) {
        continue;
      }
      s += w[static_cast<std::size_t>(j + half)] * samples[k];
    }
    out[i] = s;
  }
  return out;
}

DiscreteFunction mollify(const DiscreteFunction& u, double delta) {
  return DiscreteFunction(u.grid_ptr(), mollify_samples(u.values(), u.grid().spacing(), delta, false));
}

std::vector<double> table_coordinates(double half_width, double spacing) {
  if (!(spacing > 0.0)) throw ValidationError("table spacing must be positive");
  const int n = std::max(2, static_cast<int>(std::lround(2.0 * half_width / spacing)));
  std::vector<double> c(static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i) c[static_cast<std::size_t>(i)] = -half_width + 2.0 * half_width * i / n;
  return c;
}

PairTable mollify(const PairField& phi, double delta, const std::vector<double>& coords) {
  const PairQuadrature& quad = phi.quadrature();
  const Grid& g = quad.grid();
  if (!(delta >= 2.0 * g.spacing())) throw ValidationError("mollifier width delta must be at least two grid spacings");
  const int C = g.cell_count();
  MatrixXd S = MatrixXd::Zero(C, C);
  MatrixXd W = MatrixXd::Zero(C, C);
  const auto cx = quad.cell_x();
  const auto cy = quad.cell_y();
  const auto w = quad.w();
  for (std::size_t q = 0; q < phi.upper_size(); ++q) {
    S(cx[q], cy[q]) += w[q] * phi.upper(q);
    W(cx[q], cy[q]) += w[q];
    S(cy[q], cx[q]) += w[q] * phi.lower(q);
    W(cy[q], cx[q]) += w[q];
  }
  const auto n = static_cast<Index>(coords.size());
  MatrixXd B(n, C);
  for (Index i = 0; i < n; ++i)
    for (int c = 0; c < C; ++c)
      B(i, c) = smooth_bump(2.0 * (coords[static_cast<std::size_t>(i)] - (g.cell_left(c) + 0.5 * g.spacing())) / delta);
  const MatrixXd num = B * S * B.transpose();
  const MatrixXd den = B * W * B.transpose();
  PairTable out;
  out.coords = coords;
  out.values = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (den(i, j) > 0.0) out.values(i, j) = num(i, j) / den(i, j);
  return out;
}

double table_pairing(const PairTable& a, const PairTable& b, const std::function<double(double, double)>& psi) {
  if (a.coords != b.coords) throw ValidationError("tables live on different coordinates");
  const auto n = a.coords.size();
  std::vector<double> tw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? a.coords[i] - a.coords[i - 1] : 0.0;
    const double right = i + 1 < n ? a.coords[i + 1] - a.coords[i] : 0.0;
    tw[i] = 0.5 * (left + right);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto ii = static_cast<Index>(i), jj = static_cast<Index>(j);
      s += tw[i] * tw[j] * a.values(ii, jj) * b.values(ii, jj) * psi(a.coords[i], a.coords[j]);
    }
  return s;
}

// ----------------------------------------------------------------------------
// Effective kernel

EffectiveKernel estimate_effective_kernel(const PairTable& eta, const PairTable& dw, const FracParams& params,
                                          double tau_rel, double delta, double half_width, double lambda,
                                          double Lambda) {
  if (!(tau_rel > 0.0)) throw ValidationError("denominator floor tau must be positive");
  if (eta.coords != dw.coords) throw ValidationError("tables live on different coordinates");
  const double p = params.p;
  const auto n = static_cast<Index>(eta.coords.size());
  EffectiveKernel eff;
  eff.coords = eta.coords;
  eff.corridor_lo = lambda;
  eff.corridor_hi = std::pow(Lambda, params.p_conj()) / lambda;
  eff.a0 = MatrixXd::Constant(n, n, kNaN);
  eff.mask = Eigen::MatrixXi::Zero(n, n);
  const double edge = half_width - 0.5 * delta;
  auto inside = [&](Index i, Index j) {
    const double x = eff.coords[static_cast<std::size_t>(i)];
    const double y = eff.coords[static_cast<std::size_t>(j)];
    return std::abs(x) <= edge + 1e-12 && std::abs(y) <= edge + 1e-12 && std::abs(x - y) >= delta - 1e-12;
  };
  double peak = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (inside(i, j)) peak = std::max(peak, std::pow(std::abs(dw.values(i, j)), p - 1.0));
  eff.tau = tau_rel * peak;
  eff.min_value = std::numeric_limits<double>::infinity();
  eff.max_value = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (!inside(i, j)) continue;
      const double d = dw.values(i, j);
      const double mag = std::pow(std::abs(d), p - 1.0);
      if (!(mag >= eff.tau) || mag == 0.0) continue;
      const double a = eta.values(i, j) / std::copysign(mag, d);
      eff.a0(i, j) = a;
      eff.mask(i, j) = 1;
      ++eff.masked;
      eff.min_value = std::min(eff.min_value, a);
      eff.max_value = std::max(eff.max_value, a);
    }
  }
  if (eff.masked == 0) throw EmptyMask("effective kernel: the denominator floor excludes every table point");
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (eff.mask(i, j) && eff.mask(j, i))
        eff.max_asymmetry = std::max(eff.max_asymmetry, std::abs(eff.a0(i, j) - eff.a0(j, i)));
  return eff;
}

CorridorVerdict validate_corridor(const EffectiveKernel& eff, double lambda, double Lambda, double p) {
  if (eff.masked == 0) throw EmptyMask("corridor check needs a nonempty mask");
  CorridorVerdict v;
  v.lo = lambda;
  v.hi = std::pow(Lambda, p / (p - 1.0)) / lambda;
  v.tol = v.hi > v.lo ? 0.05 * (v.hi - v.lo) : 0.05 * lambda;
  v.min_value = eff.min_value;
  v.max_value = eff.max_value;
  double worst = -1.0;
  const auto n = static_cast<Index>(eff.coords.size());
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (!eff.mask(i, j)) continue;
      const double a = eff.a0(i, j);
      const double excess = std::max(v.lo - a, a - v.hi);
      if (excess > worst) {
        worst = excess;
        v.worst_x = eff.coords[static_cast<std::size_t>(i)];
        v.worst_y = eff.coords[static_cast<std::size_t>(j)];
        v.worst_value = a;
      }
    }
  v.passed = worst <= v.tol;
  return v;
}

namespace {

struct Table {
  double x0, dx;
  Index n;
  MatrixXd a;

  double operator()(double x, double y) const {
    auto locate = [&](double z, Index& k, double& t) {
      double s = (z - x0) / dx;
      s = std::clamp(s, 0.0, static_cast<double>(n - 1));
      k = std::min(static_cast<Index>(s), n - 2);
      t = s - static_cast<double>(k);
    };
    Index i, j;
    double tx, ty;
    locate(x, i, tx);
    locate(y, j, ty);
    return (1 - tx) * (1 - ty) * a(i, j) + tx * (1 - ty) * a(i + 1, j) + (1 - tx) * ty * a(i, j + 1) +
           tx * ty * a(i + 1, j + 1);
  }
};

}  // namespace

Kernel tabulated_kernel(const EffectiveKernel& eff, std::string label) {
  const auto n = static_cast<Index>(eff.coords.size());
  if (n < 2) throw ValidationError("effective kernel table is too small");
  if (eff.masked == 0) throw EmptyMask("cannot tabulate an effective kernel with an empty mask");
  std::vector<std::pair<Index, Index>> masked;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (eff.mask(i, j)) masked.emplace_back(i, j);
  MatrixXd a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (eff.mask(i, j)) {
        a(i, j) = eff.a0(i, j);
        continue;
      }
      Index best = -1;
      Index bi = 0, bj = 0;
      for (const auto& [mi, mj] : masked) {
        const Index d = (mi - i) * (mi - i) + (mj - j) * (mj - j);
        if (best < 0 || d < best) {
          best = d;
          bi = mi;
          bj = mj;
        }
      }
      a(i, j) = eff.a0(bi, bj);
    }
  const MatrixXd sym = 0.5 * (a + a.transpose());
  auto table = std::make_shared<const Table>(Table{eff.coords.front(), eff.coords[1] - eff.coords[0], n, sym});
  return Kernel([table](double x, double y) { return (*table)(x, y); }, sym.minCoeff(), sym.maxCoeff(),
                std::move(label));
}

// ----------------------------------------------------------------------------
// Weak limits and div-curl

double aitken_limit(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  if (v.size() < 3) return v.back();
  const double a = v[v.size() - 3], b = v[v.size() - 2], c = v.back();
  const double d1 = b - a, d2 = c - b;
  const double den = d2 - d1;
  // Only extrapolate when the last two increments look geometric with ratio in (-1, 1).
  if (den == 0.0 || d1 == 0.0 || std::abs(d2) >= std::abs(d1)) return c;
  return c - d2 * d2 / den;
}

WeakLimitEstimate weak_limit_estimate(std::vector<std::string> names, std::vector<int> n,
                                      std::vector<std::vector<double>> values) {
  WeakLimitEstimate w;
  w.probe_names = std::move(names);
  w.n = std::move(n);
  w.values = std::move(values);
  for (const auto& v : w.values) {
    w.limit.push_back(aitken_limit(v));
    std::vector<double> c(v.size(), kNaN);
    for (std::size_t k = 1; k < v.size(); ++k) c[k] = std::abs(v[k] - v[k - 1]);
    bool mono = true;
    for (std::size_t k = std::max<std::size_t>(2, c.size() >= 3 ? c.size() - 2 : 2); k < c.size(); ++k)
      if (c[k] > c[k - 1]) mono = false;
    w.monotone_tail.push_back(mono);
    w.cauchy.push_back(std::move(c));
  }
  return w;
}

double divcurl_integral(const PairField& phi, const DiscreteFunction& v, const std::function<double(double, double)>& psi) {
  const PairField dv = sgrad(v, phi.quadrature_ptr());
  const PairQuadrature& quad = phi.quadrature();
  const auto x = quad.x();
  const auto y = quad.y();
  const auto w = quad.w();
  double s = 0.0;
  for (std::size_t q = 0; q < phi.upper_size(); ++q) {
    const double p1 = psi(x[q], y[q]);
    const double p2 = psi(y[q], x[q]);
    if (p1 == 0.0 && p2 == 0.0) continue;
    s += w[q] * (phi.upper(q) * dv.upper(q) * p1 + phi.lower(q) * dv.lower(q) * p2);
  }
  return s;
}

DivCurlTable divcurl_table(std::vector<int> n, std::vector<double> integrals, double min_ratio) {
  if (n.size() != integrals.size()) throw ValidationError("div-curl: index and integral lists differ in length");
  if (n.size() < 3) throw ValidationError("div-curl check needs at least three members");
  DivCurlTable t;
  t.n = std::move(n);
  t.integral = std::move(integrals);
  t.limit = aitken_limit(t.integral);
  for (double v : t.integral) t.defect.push_back(std::abs(v - t.limit));
  const std::size_t k = t.integral.size() - 1;
  const double last = std::abs(t.integral[k] - t.integral[k - 1]);
  const double prev = std::abs(t.integral[k - 1] - t.integral[k - 2]);
  t.halving_ratio = last > 0.0 ? prev / last : (prev > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  const double scale = std::max(1.0, std::abs(t.limit));
  // A sequence that is already constant to rounding has nothing left to halve.
  t.passed = t.halving_ratio >= min_ratio || (prev <= 1e-12 * scale && last <= 1e-12 * scale);
  return t;
}

DivCurlTable divcurl_check(const std::vector<PairField>& phis, const std::vector<DiscreteFunction>& vs,
                           const std::function<double(double, double)>& psi, const std::vector<int>& n,
                           double min_ratio) {
  if (phis.size() != vs.size() || phis.size() != n.size())
    throw ValidationError("div-curl: sequences differ in length");
  std::vector<double> I;
  for (std::size_t k = 0; k < phis.size(); ++k) I.push_back(divcurl_integral(phis[k], vs[k], psi));
  return divcurl_table(n, std::move(I), min_ratio);
}

// ----------------------------------------------------------------------------
// Sweeps

void HomogConfig::validate() const {
  params.validate();
  if (n_list.empty()) throw ValidationError("sweep needs at least one oscillation index");
  for (int n : n_list)
    if (n < 1) throw ValidationError("oscillation indices must be >= 1");
  const int n_max = *std::max_element(n_list.begin(), n_list.end());
  if (!base.is_constant() && n_max * base.frequency() * 8 > interior_nodes) {
    std::ostringstream msg;
    msg << "oscillation index " << n_max << " exceeds M/8 = " << interior_nodes / 8 << " (aliasing)";
    throw AliasingError(msg.str());
  }
  if (!base.is_constant() && delta < 4.0 / n_max * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "averaging width delta = " << delta << " must be >= 4/n_max = " << 4.0 / n_max;
    throw ValidationError(msg.str());
  }
  const double h = 2.0 * half_width / (interior_nodes + 1);
  if (delta < 2.0 * h) throw ValidationError("averaging width delta must be at least two grid spacings");
  if (!(delta < half_width)) throw ValidationError("averaging width delta must be smaller than the half-width");
  if (!(tau_rel > 0.0)) throw ValidationError("denominator floor tau must be positive");
  if (probes.pair.empty() || probes.nodal.empty()) throw ValidationError("probe dictionary is empty");
}

const SweepEntry* HomogResult::entry(int n) const {
  for (const auto& e : entries)
    if (e.n == n) return &e;
  return nullptr;
}

HomogResult run_sequence(const HomogConfig& config) {
  config.validate();
  HomogResult res;
  res.config = config;
  auto grid = build_grid(config.half_width, config.truncation_radius, config.interior_nodes);
  res.quadrature = pair_quadrature(grid, config.params, config.depth);
  const auto& quad = res.quadrature;
  const DomainRule& rule = quad->domain_rule();
  res.load = load_from_density(*grid, rule, config.load);
  const DualVector g1 = load_from_density(*grid, rule, config.corrector_load);
  const DualVector g2 = load_from_density(*grid, rule, config.second_corrector_load);
  SolverOptions aux = config.solver;
  res.load_dual_norm = dual_norm(res.load, quad, aux).value;
  res.corrector_dual_norm = dual_norm(g1, quad, aux).value;
  const auto coords = table_coordinates(config.half_width, config.table_spacing);
  const ProbeDictionary& probes = config.probes;

  res.entries.resize(config.n_list.size());
  parallel_for(
      config.n_list.size(),
      [&](std::size_t k) {
        SweepEntry& e = res.entries[k];
        e.n = config.n_list[k];
        try {
          auto op = std::make_shared<const NonlocalOperator>(quad, oscillate(config.base, e.n));
          SolverOptions opt = config.solver;
          opt.keep_flux = true;
          opt.load_dual_norm = res.load_dual_norm;
          e.solution = solve(DirichletProblem{op, res.load}, opt);
          opt.load_dual_norm = res.corrector_dual_norm;
          e.corrector = solve(DirichletProblem{op, g1}, opt);
          opt.compute_bounds = false;
          SolveReport second = solve(DirichletProblem{op, g2}, opt);

          const PairField& xi = *e.solution.flux;
          for (const auto& psi : probes.nodal) e.nodal_pairings.push_back(pairing(e.solution.u, psi, *quad));
          for (const auto& psi : probes.pair) {
            e.flux_pairings.push_back(xi.pair_with(psi));
            e.divcurl.push_back(divcurl_integral(xi, e.solution.u, psi));
            e.divcurl_corrector.push_back(divcurl_integral(xi, e.corrector.u, psi));
          }
          e.bounds = check_bounds(e.solution.u.values(), *op, res.load_dual_norm);
          e.corrector_bounds = check_bounds(e.corrector.u.values(), *op, res.corrector_dual_norm);
          e.xi_bar = mollify(xi, config.delta, coords);
          e.du_bar = mollify(sgrad(e.solution.u, quad), config.delta, coords);
          e.eta1 = mollify(*e.corrector.flux, config.delta, coords);
          e.dw1 = mollify(sgrad(e.corrector.u, quad), config.delta, coords);
          e.eta2 = mollify(*second.flux, config.delta, coords);
          e.dw2 = mollify(sgrad(second.u, quad), config.delta, coords);
          e.solution.flux.reset();
          e.corrector.flux.reset();
          e.ok = true;
        } catch (const std::exception& ex) {
          e.ok = false;
          e.error = ex.what();
        }
      },
      config.threads);

  std::vector<int> ns;
  std::vector<std::vector<double>> nodal(probes.nodal.size()), flux(probes.pair.size()), dc(probes.pair.size()),
      dcw(probes.pair.size());
  res.bounds_uniform = true;
  for (const auto& e : res.entries) {
    if (!e.ok) {
      res.bounds_uniform = false;
      continue;
    }
    ns.push_back(e.n);
    for (std::size_t i = 0; i < nodal.size(); ++i) nodal[i].push_back(e.nodal_pairings[i]);
    for (std::size_t i = 0; i < flux.size(); ++i) {
      flux[i].push_back(e.flux_pairings[i]);
      dc[i].push_back(e.divcurl[i]);
      dcw[i].push_back(e.divcurl_corrector[i]);
    }
    if (!e.bounds.passed || !e.corrector_bounds.passed) res.bounds_uniform = false;
  }
  res.solution_limits = weak_limit_estimate(probes.nodal_names, ns, nodal);
  res.flux_limits = weak_limit_estimate(probes.pair_names, ns, flux);
  if (ns.size() >= 3) {
    const SweepEntry* last = res.entry(ns.back());
    for (std::size_t i = 0; i < dc.size(); ++i) {
      DivCurlTable t = divcurl_table(ns, dc[i]);
      t.naive_product = table_pairing(last->xi_bar, last->du_bar, probes.pair[i]);
      res.divcurl.push_back(std::move(t));
      DivCurlTable tw = divcurl_table(ns, dcw[i]);
      tw.naive_product = table_pairing(last->xi_bar, last->dw1, probes.pair[i]);
      res.divcurl_corrector.push_back(std::move(tw));
    }
  }
  return res;
}

CorrectorResult make_correctors(const HomogConfig& config, const std::function<double(double)>& g) {
  config.validate();
  auto grid = build_grid(config.half_width, config.truncation_radius, config.interior_nodes);
  auto quad = pair_quadrature(grid, config.params, config.depth);
  const DualVector load = load_from_density(*grid, quad->domain_rule(), g);
  CorrectorResult out;
  out.n = config.n_list;
  out.w.resize(config.n_list.size());
  std::vector<std::optional<PairField>> fluxes(config.n_list.size());
  parallel_for(
      config.n_list.size(),
      [&](std::size_t k) {
        auto op = std::make_shared<const NonlocalOperator>(quad, oscillate(config.base, config.n_list[k]));
        SolverOptions opt = config.solver;
        opt.compute_bounds = false;
        opt.keep_flux = k + 1 == config.n_list.size();
        SolveReport r = solve(DirichletProblem{op, load}, opt);
        out.w[k] = r.u;
        if (r.flux) fluxes[k] = std::move(r.flux);
      },
      config.threads);
  const auto coords = table_coordinates(config.half_width, config.table_spacing);
  out.w_bar = mollify(out.w.back(), config.delta);
  out.eta_bar = mollify(*fluxes.back(), config.delta, coords);
  out.dw_bar = mollify(sgrad(out.w.back(), quad), config.delta, coords);
  return out;
}

ClosedLoopResult closed_loop_check(const HomogResult& run, int n_max) {
  const SweepEntry* e = run.entry(n_max);
  if (e == nullptr || !e->ok) {
    std::ostringstream msg;
    msg << "closed loop: no successful sweep entry for n = " << n_max;
    throw ValidationError(msg.str());
  }
  const HomogConfig& cfg = run.config;
  const double lambda = cfg.base.lambda() * cfg.params.normalization;
  const double Lambda = cfg.base.Lambda() * cfg.params.normalization;
  ClosedLoopResult out;
  out.n_max = n_max;
  out.kernel = estimate_effective_kernel(e->eta1, e->dw1, cfg.params, cfg.tau_rel, cfg.delta, cfg.half_width, lambda,
                                         Lambda);
  out.corridor = validate_corridor(out.kernel, lambda, Lambda, cfg.params.p);
  const EffectiveKernel second = estimate_effective_kernel(e->eta2, e->dw2, cfg.params, cfg.tau_rel, cfg.delta,
                                                           cfg.half_width, lambda, Lambda);
  const auto n = static_cast<Index>(out.kernel.coords.size());
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (!out.kernel.mask(i, j)) {
        ++out.filled;
        continue;
      }
      if (second.mask(i, j))
        out.cross_validation = std::max(out.cross_validation,
                                        std::abs(out.kernel.a0(i, j) - second.a0(i, j)) / std::abs(out.kernel.a0(i, j)));
    }
  // The table already carries the normalization constant; undo it for the operator.
  EffectiveKernel unit = out.kernel;
  unit.a0 /= cfg.params.normalization;
  auto op0 = std::make_shared<const NonlocalOperator>(run.quadrature, tabulated_kernel(unit),
                                                      OperatorOptions{false, true});
  SolverOptions opt = cfg.solver;
  opt.load_dual_norm = run.load_dual_norm;
  opt.keep_flux = true;
  out.limit_solution = solve(DirichletProblem{op0, run.load}, opt);
  const ProbeDictionary& probes = cfg.probes;
  for (std::size_t i = 0; i < probes.nodal.size(); ++i) {
    const double v0 = pairing(out.limit_solution.u, probes.nodal[i], *run.quadrature);
    out.nodal_defect = std::max(out.nodal_defect, std::abs(e->nodal_pairings[i] - v0));
    out.nodal_scale = std::max(out.nodal_scale, std::abs(e->nodal_pairings[i]));
  }
  const PairField& xi0 = *out.limit_solution.flux;
  for (std::size_t i = 0; i < probes.pair.size(); ++i) {
    const double v0 = xi0.pair_with(probes.pair[i]);
    out.flux_defect = std::max(out.flux_defect, std::abs(e->flux_pairings[i] - v0));
    out.flux_scale = std::max(out.flux_scale, std::abs(e->flux_pairings[i]));
  }
  out.limit_solution.flux.reset();
  return out;
}

}  // namespace fraclab

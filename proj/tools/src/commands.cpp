#include "fraclab_cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "fraclab/fraclab.hpp"
#include "fraclab_cli/manifest.hpp"

namespace fraclab::cli {

namespace {

using json = nlohmann::ordered_json;
using Row = std::vector<std::string>;

std::string csv_text(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

std::string yes(bool b) { return b ? "1" : "0"; }

json finite(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Context {
  const ExperimentConfig& cfg;
  RunManifest& manifest;
  int threads;
  std::ostream& log;
  std::string message;  ///< reason for a nonzero exit code returned without throwing
};

std::shared_ptr<const PairQuadrature> make_quadrature(const ExperimentConfig& cfg) {
  return pair_quadrature(build_grid(cfg.L, cfg.R, cfg.M), cfg.params(), cfg.depth);
}

json bounds_json(const BoundCheck& b) {
  return json{{"passed", b.passed},
              {"seminorm", b.seminorm},
              {"apriori_bound", b.apriori_bound},
              {"flux_norm_pow", b.flux_norm_pow},
              {"flux_bound_pow", b.flux_bound_pow},
              {"dual_norm", b.dual_norm}};
}

json report_json(const SolveReport& r) {
  return json{{"method", r.method},
              {"iterations", r.iterations},
              {"residual", r.residual},
              {"tol", r.tol},
              {"effective_tol", r.effective_tol},
              {"max_iter", r.max_iter},
              {"energy", r.energy},
              {"seminorm", r.seminorm},
              {"flux_norm", r.flux_norm},
              {"load_dual_norm", finite(r.load_dual_norm)},
              {"apriori_bound", finite(r.apriori_bound)},
              {"flux_bound", finite(r.flux_bound)}};
}

// ---------------------------------------------------------------------------
// solve

int cmd_solve(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const auto quad = make_quadrature(cfg);
  const Grid& grid = quad->grid();
  auto op = std::make_shared<const NonlocalOperator>(quad, cfg.kernel());
  const DualVector f = load_from_density(grid, quad->domain_rule(), cfg.load_density());
  SolverOptions opt = cfg.solver_options();
  opt.keep_flux = false;
  const SolveReport r = solve(DirichletProblem{op, f}, opt);
  ctx.log << "solve: " << r.method << ", " << r.iterations << " iterations, residual " << r.residual << "\n";
  ctx.manifest.record_tolerance("solve", r.effective_tol);

  const BoundCheck b = check_bounds(r.u.values(), *op, r.load_dual_norm);
  ctx.manifest.record_verdict("bounds", b.passed);

  const double fu = f(r.u);
  const double conj = fu - op->energy(r.u.values());
  const double conj_form = fu / cfg.params().p_conj();

  std::function<double(double)> reference;
  if (cfg.reference == "getoor") {
    const double scale = cfg.load_value / (std::numbers::pi * cfg.kernel_c * cfg.normalization);
    const double L = cfg.L;
    reference = [scale, L](double x) { return scale * std::sqrt(std::max(0.0, L * L - x * x)); };
  }

  std::vector<Row> rows;
  double max_err = 0.0;
  for (int i = 0; i < grid.interior_count(); ++i) {
    const double x = grid.interior_node(i);
    Row row{std::to_string(i), num(x), num(r.u.values()[i])};
    if (reference) {
      const double e = r.u.values()[i] - reference(x);
      max_err = std::max(max_err, std::abs(e));
      row.push_back(num(reference(x)));
      row.push_back(num(e));
    }
    rows.push_back(std::move(row));
  }
  Row header{"i", "x", "u"};
  if (reference) {
    header.push_back("u_ref");
    header.push_back("error");
  }
  ctx.manifest.write_csv("solution.csv", header, rows);

  json doc;
  doc["problem"] = {{"kernel", op->kernel().label()},
                    {"lambda", op->lambda()},
                    {"Lambda", op->Lambda()},
                    {"s", cfg.s},
                    {"p", cfg.p},
                    {"M", cfg.M},
                    {"load", cfg.load_name}};
  doc["report"] = report_json(r);
  doc["bounds"] = bounds_json(b);
  doc["legendre"] = {{"conjugate", conj}, {"conjugate_form", conj_form}, {"identity_defect", std::abs(conj - conj_form)}};
  if (reference) {
    double l2 = 0.0;
    const DomainRule& d = quad->domain_rule();
    for (std::size_t e = 0; e < d.size(); ++e) l2 += d.w[e] * std::pow(r.u(d.x[e]) - reference(d.x[e]), 2);
    doc["reference"] = "getoor";
    doc["l2_error"] = std::sqrt(l2);
    doc["max_nodal_error"] = max_err;
  }
  ctx.manifest.write_json("solve.json", doc);
  return kOk;
}

// ---------------------------------------------------------------------------
// homogenize

void write_effective_kernel(RunManifest& m, const EffectiveKernel& k) {
  std::vector<Row> rows;
  const auto n = static_cast<Eigen::Index>(k.coords.size());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      rows.push_back({num(k.coords[static_cast<std::size_t>(i)]), num(k.coords[static_cast<std::size_t>(j)]),
                      num(k.mask(i, j) ? k.a0(i, j) : std::nan("")), std::to_string(k.mask(i, j))});
  m.write_csv("effective_kernel.csv", {"x", "y", "a_0", "mask"}, rows);
}

json closed_loop_json(const ClosedLoopResult& c) {
  return json{{"n_max", c.n_max},
              {"nodal_defect", c.nodal_defect},
              {"nodal_scale", c.nodal_scale},
              {"relative_nodal_defect", c.relative_nodal_defect()},
              {"flux_defect", c.flux_defect},
              {"flux_scale", c.flux_scale},
              {"relative_flux_defect", c.relative_flux_defect()},
              {"cross_validation", c.cross_validation},
              {"filled", c.filled},
              {"limit_residual", c.limit_solution.residual},
              {"limit_tol", c.limit_solution.effective_tol}};
}

json corridor_json(const CorridorVerdict& v) {
  return json{{"passed", v.passed},    {"lo", v.lo},           {"hi", v.hi},
              {"tol", v.tol},          {"min_value", v.min_value}, {"max_value", v.max_value},
              {"worst_x", v.worst_x}, {"worst_y", v.worst_y}, {"worst_value", v.worst_value}};
}

int cmd_homogenize(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const HomogConfig hc = cfg.homog_config(ctx.threads);
  hc.validate();
  const HomogResult res = run_sequence(hc);
  const ProbeDictionary& probes = hc.probes;

  std::vector<Row> sweep, probe_rows;
  int failures = 0;
  for (const SweepEntry& e : res.entries) {
    if (!e.ok) {
      ++failures;
      ctx.log << "homogenize: n = " << e.n << " failed: " << e.error << "\n";
      sweep.push_back({std::to_string(e.n), "0", csv_text(e.error), "", "", "", "", "", "", "", "", "", "", ""});
      continue;
    }
    ctx.log << "homogenize: n = " << e.n << " residual " << e.solution.residual << "\n";
    ctx.manifest.record_tolerance("solve_n" + std::to_string(e.n), e.solution.effective_tol);
    sweep.push_back({std::to_string(e.n), "1", "", std::to_string(e.solution.iterations), num(e.solution.residual),
                     num(e.solution.effective_tol), num(e.solution.energy), num(e.bounds.seminorm),
                     num(e.bounds.apriori_bound), num(e.bounds.flux_norm_pow), num(e.bounds.flux_bound_pow),
                     yes(e.bounds.passed), num(e.corrector.residual), yes(e.corrector_bounds.passed)});
    for (std::size_t i = 0; i < e.nodal_pairings.size(); ++i)
      probe_rows.push_back({std::to_string(e.n), "nodal", probes.nodal_names[i], num(e.nodal_pairings[i])});
    for (std::size_t i = 0; i < e.flux_pairings.size(); ++i)
      probe_rows.push_back({std::to_string(e.n), "flux", probes.pair_names[i], num(e.flux_pairings[i])});
  }
  ctx.manifest.write_csv("sweep.csv",
                         {"n", "ok", "error", "iterations", "residual", "tol", "energy", "seminorm", "apriori_bound",
                          "flux_norm_pow", "flux_bound_pow", "bounds_passed", "corrector_residual",
                          "corrector_bounds_passed"},
                         sweep);
  ctx.manifest.write_csv("probes.csv", {"n", "kind", "probe", "value"}, probe_rows);

  {
    const Grid& grid = res.quadrature->grid();
    Row header{"x"};
    for (const auto& e : res.entries) header.push_back("u_n" + std::to_string(e.n));
    std::vector<Row> rows;
    for (int i = 0; i < grid.interior_count(); ++i) {
      Row r{num(grid.interior_node(i))};
      for (const auto& e : res.entries) r.push_back(e.ok ? num(e.solution.u.values()[i]) : "nan");
      rows.push_back(std::move(r));
    }
    ctx.manifest.write_csv("solutions.csv", header, rows);
  }

  json doc;
  doc["bounds_uniform"] = res.bounds_uniform;
  doc["failures"] = failures;
  ctx.manifest.record_verdict("bounds_uniform", res.bounds_uniform);

  std::vector<Row> dc_rows;
  json dc = json::array();
  auto add_divcurl = [&](const std::vector<DivCurlTable>& tables, const std::string& variant) {
    for (std::size_t k = 0; k < tables.size(); ++k) {
      const DivCurlTable& t = tables[k];
      for (std::size_t j = 0; j < t.n.size(); ++j)
        dc_rows.push_back({probes.pair_names[k], variant, std::to_string(t.n[j]), num(t.integral[j]), num(t.defect[j]),
                           num(t.limit), num(t.halving_ratio), yes(t.passed)});
      dc.push_back({{"probe", probes.pair_names[k]},
                    {"variant", variant},
                    {"limit", t.limit},
                    {"halving_ratio", finite(t.halving_ratio)},
                    {"passed", t.passed}});
    }
  };
  if (failures == 0) {
    add_divcurl(res.divcurl, "solution");
    add_divcurl(res.divcurl_corrector, "corrector");
    ctx.manifest.write_csv("divcurl.csv",
                           {"probe", "variant", "n", "integral", "defect", "limit", "halving_ratio", "passed"}, dc_rows);
    bool all = true;
    for (const auto& t : res.divcurl) all = all && t.passed;
    ctx.manifest.record_verdict("divcurl", all);
  }
  doc["divcurl"] = dc;

  const int n_max = *std::max_element(cfg.sweep_n.begin(), cfg.sweep_n.end());
  const SweepEntry* last = res.entry(n_max);
  if (last != nullptr && last->ok) {
    const ClosedLoopResult cl = closed_loop_check(res, n_max);
    write_effective_kernel(ctx.manifest, cl.kernel);
    doc["effective_kernel"] = {{"masked", cl.kernel.masked},
                               {"tau", cl.kernel.tau},
                               {"min_value", cl.kernel.min_value},
                               {"max_value", cl.kernel.max_value},
                               {"max_asymmetry", cl.kernel.max_asymmetry}};
    doc["corridor"] = corridor_json(cl.corridor);
    ctx.manifest.record_verdict("corridor", cl.corridor.passed);
    json loops = json::array();
    loops.push_back(closed_loop_json(cl));
    std::vector<Row> cl_rows{{std::to_string(n_max), num(cl.nodal_defect), num(cl.relative_nodal_defect()),
                              num(cl.flux_defect), num(cl.relative_flux_defect()), num(cl.cross_validation)}};
    const SweepEntry* cmp = res.entry(cfg.compare_n);
    if (cfg.compare_n != n_max && cmp != nullptr && cmp->ok) {
      const ClosedLoopResult prev = closed_loop_check(res, cfg.compare_n);
      loops.push_back(closed_loop_json(prev));
      cl_rows.insert(cl_rows.begin(), Row{std::to_string(cfg.compare_n), num(prev.nodal_defect),
                                          num(prev.relative_nodal_defect()), num(prev.flux_defect),
                                          num(prev.relative_flux_defect()), num(prev.cross_validation)});
      const double ratio = cl.nodal_defect > 0.0 ? prev.nodal_defect / cl.nodal_defect
                                                 : std::numeric_limits<double>::infinity();
      doc["closed_loop_ratio"] = finite(ratio);
      ctx.manifest.record_verdict("closed_loop_halving", ratio >= 2.0);
    }
    doc["closed_loop"] = loops;
    ctx.manifest.write_csv("closed_loop.csv",
                           {"n_max", "nodal_defect", "relative_nodal_defect", "flux_defect", "relative_flux_defect",
                            "cross_validation"},
                           cl_rows);
    ctx.log << "homogenize: a_0 in [" << cl.kernel.min_value << ", " << cl.kernel.max_value << "], corridor "
            << (cl.corridor.passed ? "pass" : "fail") << "\n";
  }
  ctx.manifest.write_json("homogenize.json", doc);
  if (failures > 0) {
    ctx.message = std::to_string(failures) + " sweep member(s) failed; partial outputs written";
    return kSolver;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// gamma

struct LimitKernel {
  Kernel kernel;
  OperatorOptions options;
  std::string source;
  std::string upstream_manifest;
};

LimitKernel resolve_limit(const ExperimentConfig& cfg) {
  const std::string source = cfg.limit_kernel;
  if (source.rfind("constant:", 0) == 0) {
    double c = 0.0;
    try {
      c = std::stod(source.substr(9));
    } catch (const std::exception&) {
      throw ValidationError("gamma.limit_kernel: cannot read the constant in '" + source + "'");
    }
    if (!(c > 0.0)) throw ValidationError("gamma.limit_kernel: the constant must be positive");
    return {constant_kernel(c), OperatorOptions{}, source, ""};
  }
  const std::filesystem::path path =
      source.empty() ? std::filesystem::path(cfg.out_dir) / "effective_kernel.csv" : std::filesystem::path(source);
  if (!std::filesystem::exists(path))
    throw MissingUpstream("gamma needs the effective-kernel table '" + path.string() +
                          "' (run homogenize first) or gamma.limit_kernel = constant:<c>");
  std::string upstream;
  EffectiveKernel eff = read_effective_kernel(path.string(), &upstream);
  eff.a0 /= cfg.normalization;
  return {tabulated_kernel(eff), OperatorOptions{false, true}, path.string(), upstream};
}

int cmd_gamma(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const LimitKernel lim = resolve_limit(cfg);
  const Kernel base = cfg.base_kernel();
  const int n_max = *std::max_element(cfg.sweep_n.begin(), cfg.sweep_n.end());
  if (!base.is_constant() && 8 * n_max > cfg.M)
    throw AliasingError("sweep index " + std::to_string(n_max) + " exceeds M/8 = " + std::to_string(cfg.M / 8) +
                        " (aliasing)");
  const auto quad = make_quadrature(cfg);
  std::vector<EnergyFunctional> seq;
  for (int n : cfg.sweep_n) seq.emplace_back(std::make_shared<const NonlocalOperator>(quad, oscillate(base, n)));
  const EnergyFunctional limit(std::make_shared<const NonlocalOperator>(quad, lim.kernel, lim.options));
  const auto loads = default_load_dictionary(cfg.L, cfg.seed);
  const SolverOptions opt = cfg.solver_options();
  const GammaReport rep = gamma_diagnostic(seq, cfg.sweep_n, limit, loads, cfg.gamma_rel_tol, opt, ctx.threads);
  ctx.manifest.record_tolerance("solve", opt.tolerance(cfg.params()));
  ctx.manifest.record_tolerance("gamma_relative", cfg.gamma_rel_tol);
  ctx.manifest.record_verdict("gamma", rep.passed);

  std::map<std::string, double> limit_value;
  for (const auto& v : rep.loads) limit_value[v.load] = v.limit_conjugate;
  std::vector<Row> rows;
  for (const auto& r : rep.rows)
    rows.push_back({r.load, std::to_string(r.n), num(r.conjugate), num(limit_value[r.load]), num(r.defect),
                    num(r.defect / std::abs(limit_value[r.load])), num(r.identity_defect)});
  ctx.manifest.write_csv("gamma.csv",
                         {"load", "n", "conjugate", "limit_conjugate", "defect", "relative_defect", "identity_defect"},
                         rows);

  json doc;
  doc["limit_kernel"] = lim.source;
  if (!lim.upstream_manifest.empty()) {
    doc["upstream_manifest"] = lim.upstream_manifest;
    doc["upstream_matches"] = lim.upstream_manifest == ctx.manifest.hash();
  }
  doc["tolerance"] = rep.tolerance;
  doc["passed"] = rep.passed;
  doc["failures"] = rep.failures;
  doc["max_identity_defect"] = rep.max_identity_defect;
  json per = json::array();
  for (const auto& v : rep.loads)
    per.push_back({{"load", v.load},
                   {"limit_conjugate", v.limit_conjugate},
                   {"final_defect", v.final_defect},
                   {"relative_defect", v.relative_defect},
                   {"decreasing", v.decreasing},
                   {"passed", v.passed}});
  doc["loads"] = per;
  ctx.log << "gamma: " << (rep.passed ? "consistent" : "inconsistent") << " with the limit (" << rep.failures
          << " of " << rep.loads.size() << " loads fail)\n";

  if (cfg.negative_control && !base.is_constant()) {
    const EnergyFunctional neg(std::make_shared<const NonlocalOperator>(quad, constant_kernel(base.Lambda())));
    const GammaReport nrep = gamma_diagnostic(seq, cfg.sweep_n, neg, loads, cfg.gamma_rel_tol, opt, ctx.threads);
    doc["negative_control"] = {{"limit_kernel", "constant:" + num(base.Lambda())},
                               {"failures", nrep.failures},
                               {"rejected", !nrep.passed}};
    ctx.manifest.record_verdict("negative_control_rejected", !nrep.passed);
    ctx.log << "gamma: negative control " << (nrep.passed ? "NOT rejected" : "rejected") << " (" << nrep.failures
            << " loads fail)\n";
  }
  ctx.manifest.write_json("gamma.json", doc);
  return kOk;
}

// ---------------------------------------------------------------------------
// verify

struct Property {
  std::string name;
  bool passed;
  double measured;
  double threshold;
  std::string detail;
};

int cmd_verify(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const auto quad = make_quadrature(cfg);
  const Grid& grid = quad->grid();
  std::vector<Property> props;

  {
    const Kernel k = cfg.kernel();
    const KernelValidation kv = validate_kernel(k, 4000, cfg.R);
    props.push_back({"kernel", kv.passed, kv.max_asymmetry, 1e-12, kv.message});
  }
  {
    double worst = 0.0;
    for (int k = 0; k < cfg.ibp_fields; ++k) {
      const PairField phi = random_antisymmetric_field(quad, cfg.seed + static_cast<std::uint64_t>(k));
      const DiscreteFunction u(quad->grid_ptr(), random_smooth(grid, cfg.seed + 1000 + static_cast<std::uint64_t>(k)));
      worst = std::max(worst, ibp_check(phi, u, grid.spacing()));
    }
    props.push_back({"ibp", worst <= 1e-10, worst, 1e-10, std::to_string(cfg.ibp_fields) + " random fields"});
  }
  {
    std::set<double> ps{1.5, 2.0, 3.0, 4.0, cfg.p};
    for (double p : ps) {
      const SimonSweep sw = simon_sweep(p, cfg.simon_samples, cfg.seed);
      std::ostringstream d;
      d << "worst pair (" << sw.worst_a << ", " << sw.worst_b << ")";
      props.push_back({"simon_p" + num(p), sw.min_gap >= 0.0, sw.min_gap, 0.0, d.str()});
    }
  }
  {
    const PoincareReport pr = empirical_poincare(*quad);
    const bool ok = std::isfinite(pr.constant) && pr.constant > 0.0;
    props.push_back({"poincare", ok, pr.constant, 0.0, "empirical constant over the probe set"});
  }
  auto op = std::make_shared<const NonlocalOperator>(quad, cfg.kernel());
  const DualVector f = load_from_density(grid, quad->domain_rule(), cfg.load_density());
  SolverOptions opt = cfg.solver_options();
  opt.keep_flux = false;
  const SolveReport r = solve(DirichletProblem{op, f}, opt);
  ctx.manifest.record_tolerance("solve", r.effective_tol);
  {
    const MinimizerCheck mc = verify_minimizer(r.u.values(), *op, f, cfg.minimizer_trials, r.effective_tol, cfg.seed);
    props.push_back({"minimizer", mc.passed, mc.worst_margin, 0.0, "worst t = " + num(mc.worst_t)});
  }
  {
    const BoundCheck b = check_bounds(r.u.values(), *op, r.load_dual_norm);
    props.push_back({"bounds", b.passed, b.seminorm / std::max(b.apriori_bound, 1e-300), 1.01, "seminorm / a-priori bound"});
  }
  {
    const UniquenessReport ur = uniqueness_probe(DirichletProblem{op, f}, cfg.uniqueness_inits, opt, cfg.seed);
    props.push_back({"uniqueness", ur.max_distance <= 1e-4, ur.max_distance, 1e-4,
                     std::to_string(cfg.uniqueness_inits) + " random starts"});
  }

  std::vector<Row> rows;
  json arr = json::array();
  int failed = 0;
  for (const auto& pr : props) {
    rows.push_back({pr.name, yes(pr.passed), num(pr.measured), num(pr.threshold), csv_text(pr.detail)});
    arr.push_back({{"property", pr.name},
                   {"passed", pr.passed},
                   {"measured", finite(pr.measured)},
                   {"threshold", pr.threshold},
                   {"detail", pr.detail}});
    ctx.manifest.record_verdict(pr.name, pr.passed);
    ctx.log << "verify: " << pr.name << (pr.passed ? " PASS " : " FAIL ") << pr.measured << "\n";
    if (!pr.passed) ++failed;
  }
  ctx.manifest.write_csv("verify.csv", {"property", "passed", "measured", "threshold", "detail"}, rows);
  ctx.manifest.write_json("verify.json", json{{"passed", failed == 0}, {"failures", failed}, {"properties", arr}});
  return failed == 0 ? kOk : kPropertyFailure;
}

// ---------------------------------------------------------------------------
// benchmark

int cmd_benchmark(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); };
  std::vector<Row> rows;
  auto t0 = clock::now();
  const auto quad = make_quadrature(cfg);
  auto t1 = clock::now();
  rows.push_back({"pair_quadrature", num(seconds(t0, t1)), std::to_string(quad->upper_size())});
  auto op = std::make_shared<const NonlocalOperator>(quad, cfg.kernel());
  auto t2 = clock::now();
  rows.push_back({"operator", num(seconds(t1, t2)), std::to_string(op->size())});
  const DualVector f = load_from_density(quad->grid(), quad->domain_rule(), cfg.load_density());
  SolverOptions opt = cfg.solver_options();
  opt.compute_bounds = false;
  opt.keep_flux = false;
  const SolveReport r = solve(DirichletProblem{op, f}, opt);
  auto t3 = clock::now();
  rows.push_back({"solve", num(seconds(t2, t3)), std::to_string(r.iterations)});
  const DualNormReport dn = dual_norm(f, quad, opt);
  auto t4 = clock::now();
  rows.push_back({"dual_norm", num(seconds(t3, t4)), num(dn.value)});
  ctx.manifest.write_csv("benchmark.csv", {"stage", "seconds", "size"}, rows);
  for (const auto& row : rows) ctx.log << "benchmark: " << row[0] << " " << row[1] << " s\n";
  return kOk;
}

}  // namespace

EffectiveKernel read_effective_kernel(const std::string& path, std::string* manifest) {
  std::ifstream in(path);
  if (!in) throw MissingUpstream("cannot read effective-kernel table '" + path + "'");
  struct Entry {
    double x, y, a;
    int mask;
  };
  std::vector<Entry> entries;
  std::set<double> xs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (manifest != nullptr && line.rfind("# manifest ", 0) == 0) *manifest = line.substr(11);
      continue;
    }
    if (line.rfind("x,", 0) == 0) continue;
    std::stringstream ss(line);
    std::string a, b, c, d;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',') || !std::getline(ss, d))
      throw ValidationError("effective-kernel table: malformed row '" + line + "'");
    try {
      entries.push_back({std::stod(a), std::stod(b), c == "nan" ? std::nan("") : std::stod(c), std::stoi(d)});
    } catch (const std::exception&) {
      throw ValidationError("effective-kernel table: malformed row '" + line + "'");
    }
    xs.insert(entries.back().x);
  }
  EffectiveKernel k;
  k.coords.assign(xs.begin(), xs.end());
  const auto n = static_cast<Eigen::Index>(k.coords.size());
  if (n == 0 || static_cast<Eigen::Index>(entries.size()) != n * n)
    throw ValidationError("effective-kernel table '" + path + "' is not a full square grid");
  k.a0 = Eigen::MatrixXd::Constant(n, n, std::nan(""));
  k.mask = Eigen::MatrixXi::Zero(n, n);
  auto index = [&](double v) {
    return static_cast<Eigen::Index>(std::lower_bound(k.coords.begin(), k.coords.end(), v) - k.coords.begin());
  };
  k.min_value = std::numeric_limits<double>::infinity();
  k.max_value = -std::numeric_limits<double>::infinity();
  for (const auto& e : entries) {
    const auto i = index(e.x), j = index(e.y);
    k.mask(i, j) = e.mask;
    if (e.mask) {
      k.a0(i, j) = e.a;
      ++k.masked;
      k.min_value = std::min(k.min_value, e.a);
      k.max_value = std::max(k.max_value, e.a);
    }
  }
  if (k.masked == 0) throw EmptyMask("effective-kernel table '" + path + "' has an empty mask");
  return k;
}

int run_command(const std::string& command, const RunOptions& options, std::ostream& log, std::ostream& err) {
  static const std::map<std::string, int (*)(Context&)> commands{{"solve", cmd_solve},
                                                                 {"homogenize", cmd_homogenize},
                                                                 {"gamma", cmd_gamma},
                                                                 {"verify", cmd_verify},
                                                                 {"benchmark", cmd_benchmark}};
  const auto it = commands.find(command);
  if (it == commands.end()) {
    err << "error: unknown subcommand '" << command << "'\n";
    return kValidation;
  }
  ExperimentConfig cfg;
  try {
    if (!options.config_path.empty()) cfg = ExperimentConfig::load(options.config_path);
    if (options.out_dir) cfg.out_dir = *options.out_dir;
    if (options.seed) cfg.seed = *options.seed;
    if (options.threads < 1) throw ValidationError("--threads must be >= 1");
    cfg.validate();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
  set_default_threads(options.threads);

  std::unique_ptr<DirectoryLock> lock;
  try {
    lock = std::make_unique<DirectoryLock>(cfg.out_dir);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
  RunManifest manifest(cfg.out_dir, command, cfg.to_text(), cfg.experiment_text(), options.deterministic,
                       options.threads);
  Context ctx{cfg, manifest, options.threads, log, {}};
  int code = kOk;
  std::string message;
  try {
    code = it->second(ctx);
    message = ctx.message;
  } catch (const MissingUpstream& e) {
    code = kMissingUpstream;
    message = e.what();
  } catch (const ValidationError& e) {
    code = kValidation;
    message = e.what();
  } catch (const IllPosed& e) {
    code = kValidation;
    message = e.what();
  } catch (const NonConvergence& e) {
    code = kSolver;
    message = e.what();
  } catch (const EmptyMask& e) {
    code = kSolver;
    message = e.what();
  } catch (const std::exception& e) {
    code = kInternal;
    message = e.what();
  }
  if (!message.empty()) err << "error: " << message << "\n";
  manifest.finish(code, message);
  return code;
}

}  // namespace fraclab::cli

#include "fraclab_cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fraclab::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ValidationError("config key '" + key + "': expected a number, got '" + v + "'");
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ValidationError("config key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::vector<int> to_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<int>(to_integer(key, trim(item))));
  return out;
}

const std::vector<LoadEntry>& dictionary() {
  static const std::vector<LoadEntry> d = default_load_dictionary(1.0);
  return d;
}

bool known_load(const std::string& name) {
  if (name == "constant" || name == "table") return true;
  return std::any_of(dictionary().begin(), dictionary().end(), [&](const LoadEntry& e) { return e.name == name; });
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto num = [](double& dst) -> Setter { return [&dst](const std::string& k, const std::string& v) { dst = to_double(k, v); }; };
  auto int_ = [](int& dst) -> Setter {
    return [&dst](const std::string& k, const std::string& v) { dst = static_cast<int>(to_integer(k, v)); };
  };
  auto str = [](std::string& dst) -> Setter { return [&dst](const std::string&, const std::string& v) { dst = v; }; };
  const std::map<std::string, Setter> setters{
      {"domain.L", num(c.L)},
      {"domain.R", num(c.R)},
      {"domain.M", int_(c.M)},
      {"domain.depth", int_(c.depth)},
      {"frac.s", num(c.s)},
      {"frac.p", num(c.p)},
      {"frac.normalization", num(c.normalization)},
      {"kernel.family", str(c.kernel_family)},
      {"kernel.c", num(c.kernel_c)},
      {"kernel.lambda", num(c.kernel_lambda)},
      {"kernel.Lambda", num(c.kernel_Lambda)},
      {"kernel.n", int_(c.kernel_n)},
      {"load.name", str(c.load_name)},
      {"load.value", num(c.load_value)},
      {"load.table", str(c.load_table)},
      {"reference", str(c.reference)},
      {"sweep.n", [&c](const std::string& k, const std::string& v) { c.sweep_n = to_list(k, v); }},
      {"sweep.delta", num(c.delta)},
      {"sweep.tau", num(c.tau)},
      {"sweep.probes", str(c.probes)},
      {"sweep.table_spacing", num(c.table_spacing)},
      {"sweep.compare_n", int_(c.compare_n)},
      {"solver.tol", num(c.tol)},
      {"solver.max_iter", int_(c.max_iter)},
      {"gamma.limit_kernel", str(c.limit_kernel)},
      {"gamma.rel_tol", num(c.gamma_rel_tol)},
      {"gamma.negative_control", [&c](const std::string& k, const std::string& v) { c.negative_control = to_bool(k, v); }},
      {"verify.ibp_fields", int_(c.ibp_fields)},
      {"verify.simon_samples", int_(c.simon_samples)},
      {"verify.minimizer_trials", int_(c.minimizer_trials)},
      {"verify.uniqueness_inits", int_(c.uniqueness_inits)},
      {"output.dir", str(c.out_dir)},
      {"seed", [&c](const std::string& k, const std::string& v) { c.seed = static_cast<std::uint64_t>(to_integer(k, v)); }},
  };
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ValidationError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second(key, value);
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream o;
  o << "# domain\n"
    << "domain.L = " << fmt(L) << "\n"
    << "domain.R = " << fmt(R) << "\n"
    << "domain.M = " << M << "\n"
    << "domain.depth = " << depth << "\n"
    << "# fractional order\n"
    << "frac.s = " << fmt(s) << "\n"
    << "frac.p = " << fmt(p) << "\n"
    << "frac.normalization = " << fmt(normalization) << "\n"
    << "# kernel\n"
    << "kernel.family = " << kernel_family << "\n"
    << "kernel.c = " << fmt(kernel_c) << "\n"
    << "kernel.lambda = " << fmt(kernel_lambda) << "\n"
    << "kernel.Lambda = " << fmt(kernel_Lambda) << "\n"
    << "kernel.n = " << kernel_n << "\n"
    << "# load\n"
    << "load.name = " << load_name << "\n"
    << "load.value = " << fmt(load_value) << "\n"
    << "load.table = " << load_table << "\n"
    << "reference = " << reference << "\n"
    << "# sweep\n"
    << "sweep.n = " << fmt_list(sweep_n) << "\n"
    << "sweep.delta = " << fmt(delta) << "\n"
    << "sweep.tau = " << fmt(tau) << "\n"
    << "sweep.probes = " << probes << "\n"
    << "sweep.table_spacing = " << fmt(table_spacing) << "\n"
    << "sweep.compare_n = " << compare_n << "\n"
    << "# solver\n"
    << "solver.tol = " << fmt(tol) << "\n"
    << "solver.max_iter = " << max_iter << "\n"
    << "# gamma\n"
    << "gamma.limit_kernel = " << limit_kernel << "\n"
    << "gamma.rel_tol = " << fmt(gamma_rel_tol) << "\n"
    << "gamma.negative_control = " << (negative_control ? "true" : "false") << "\n"
    << "# verify\n"
    << "verify.ibp_fields = " << ibp_fields << "\n"
    << "verify.simon_samples = " << simon_samples << "\n"
    << "verify.minimizer_trials = " << minimizer_trials << "\n"
    << "verify.uniqueness_inits = " << uniqueness_inits << "\n"
    << "# run\n"
    << "output.dir = " << out_dir << "\n"
    << "seed = " << seed << "\n";
  return o.str();
}

std::string ExperimentConfig::experiment_text() const {
  ExperimentConfig c = *this;
  c.out_dir.clear();
  return c.to_text();
}

void ExperimentConfig::validate() const {
  params().validate();
  if (!(L > 0.0) || !std::isfinite(L)) throw ValidationError("domain half-width L must be positive");
  if (!(R > L)) throw ValidationError("truncation radius R must exceed the half-width L");
  if (M < 3) throw ValidationError("domain.M must be at least 3");
  if (depth < 1) throw ValidationError("domain.depth must be at least 1");
  const auto& names = builtin_kernel_names();
  if (std::find(names.begin(), names.end(), kernel_family) == names.end())
    throw ValidationError("unknown kernel family '" + kernel_family + "'");
  if (kernel_family == "constant" && !(kernel_c > 0.0)) throw ValidationError("kernel.c must be positive");
  if (kernel_family != "constant" && !(kernel_lambda > 0.0 && kernel_Lambda >= kernel_lambda))
    throw ValidationError("kernel bounds need 0 < lambda <= Lambda");
  if (kernel_n < 1) throw ValidationError("kernel.n must be >= 1");
  if (kernel_family != "constant" && 8 * kernel_n > M)
    throw AliasingError("kernel.n = " + std::to_string(kernel_n) + " exceeds M/8 = " + std::to_string(M / 8) +
                        " (aliasing)");
  if (!known_load(load_name)) throw ValidationError("unknown load '" + load_name + "'");
  if (!std::isfinite(load_value)) throw ValidationError("load.value must be finite");
  if (load_name == "table") {
    if (load_table.empty()) throw ValidationError("load.name = table needs load.table");
    if (!std::filesystem::exists(load_table)) throw ValidationError("load table '" + load_table + "' not found");
  }
  if (reference != "none" && reference != "getoor") throw ValidationError("reference must be none or getoor");
  if (reference == "getoor" &&
      !(std::abs(s - 0.5) < 1e-14 && params().quadratic() && kernel_family == "constant" && load_name == "constant"))
    throw ValidationError("reference = getoor needs s = 0.5, p = 2, a constant kernel and a constant load");
  if (sweep_n.empty()) throw ValidationError("sweep.n must list at least one index");
  for (int n : sweep_n)
    if (n < 1) throw ValidationError("sweep.n entries must be >= 1");
  if (probes != "default") throw ValidationError("sweep.probes: only the 'default' dictionary is available");
  if (!(tau > 0.0)) throw ValidationError("sweep.tau must be positive");
  if (!(table_spacing > 0.0)) throw ValidationError("sweep.table_spacing must be positive");
  if (tol < 0.0) throw ValidationError("solver.tol must be >= 0 (0 selects the default)");
  if (max_iter < 1) throw ValidationError("solver.max_iter must be >= 1");
  if (!(gamma_rel_tol > 0.0)) throw ValidationError("gamma.rel_tol must be positive");
  if (ibp_fields < 1 || simon_samples < 1 || minimizer_trials < 1)
    throw ValidationError("verify sample counts must be >= 1");
  if (uniqueness_inits < 2) throw ValidationError("verify.uniqueness_inits must be >= 2");
  if (out_dir.empty()) throw ValidationError("output.dir must not be empty");
}

Kernel ExperimentConfig::base_kernel() const {
  return builtin_kernel(kernel_family, {{"c", kernel_c}, {"lambda", kernel_lambda}, {"Lambda", kernel_Lambda}});
}

Kernel ExperimentConfig::kernel() const { return oscillate(base_kernel(), kernel_n); }

std::function<double(double)> ExperimentConfig::load_density() const {
  const double scale = load_value;
  if (load_name == "constant") return [scale](double) { return scale; };
  if (load_name == "table") {
    std::ifstream in(load_table);
    if (!in) throw ValidationError("cannot read load table '" + load_table + "'");
    std::vector<std::pair<double, double>> pts;
    std::string line;
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0]))) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw ValidationError("load table rows must be 'x,f'");
      pts.emplace_back(to_double("load.table", trim(line.substr(0, comma))),
                       to_double("load.table", trim(line.substr(comma + 1))));
    }
    if (pts.size() < 2) throw ValidationError("load table needs at least two rows");
    std::sort(pts.begin(), pts.end());
    return [pts, scale](double x) {
      if (x <= pts.front().first) return scale * pts.front().second;
      if (x >= pts.back().first) return scale * pts.back().second;
      const auto it = std::upper_bound(pts.begin(), pts.end(), std::pair{x, -std::numeric_limits<double>::infinity()});
      const auto& [x1, f1] = *it;
      const auto& [x0, f0] = *(it - 1);
      return scale * (f0 + (f1 - f0) * (x - x0) / (x1 - x0));
    };
  }
  for (const auto& e : default_load_dictionary(L)) {
    if (e.name == load_name) {
      auto f = e.density;
      return [f, scale](double x) { return scale * f(x); };
    }
  }
  throw ValidationError("unknown load '" + load_name + "'");
}

SolverOptions ExperimentConfig::solver_options() const {
  SolverOptions o;
  o.tol = tol;
  o.max_iter = max_iter;
  return o;
}

HomogConfig ExperimentConfig::homog_config(int threads) const {
  HomogConfig h;
  h.base = base_kernel();
  h.params = params();
  h.half_width = L;
  h.truncation_radius = R;
  h.interior_nodes = M;
  h.depth = depth;
  h.n_list = sweep_n;
  h.delta = delta;
  h.tau_rel = tau;
  h.table_spacing = table_spacing;
  h.load = load_density();
  h.solver = solver_options();
  h.probes = default_probes(L);
  h.threads = threads;
  return h;
}

}  // namespace fraclab::cli

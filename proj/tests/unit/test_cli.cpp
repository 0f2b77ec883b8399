#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "fraclab_cli/commands.hpp"
#include "fraclab_cli/config.hpp"
#include "fraclab_cli/manifest.hpp"
#include "json.hpp"

using namespace fraclab;
using namespace fraclab::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("fraclab_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

int run(const std::string& cmd, const fs::path& cfg, const fs::path& out, std::string* err_text = nullptr) {
  RunOptions o;
  o.config_path = cfg.string();
  o.out_dir = out.string();
  o.deterministic = true;
  std::ostringstream log, err;
  const int code = run_command(cmd, o, log, err);
  if (err_text != nullptr) *err_text = err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("config round-trips through its text form") {
  ExperimentConfig c;
  c.s = 0.3;
  c.p = 1.5;
  c.M = 97;
  c.kernel_family = "radial-bump";
  c.kernel_Lambda = 2.718281828459045;
  c.load_name = "gauss";
  c.load_value = 0.1;
  c.sweep_n = {1, 3, 9};
  c.delta = 1.0 / 3.0;
  c.negative_control = false;
  c.seed = 123456789012345ULL;
  const auto back = ExperimentConfig::parse(c.to_text());
  CHECK(back == c);
  CHECK(back.to_text() == c.to_text());
  CHECK(ExperimentConfig::parse(ExperimentConfig{}.to_text()) == ExperimentConfig{});
}

TEST_CASE("config parser handles comments and rejects bad input") {
  const auto c = ExperimentConfig::parse("# header\n frac.p = 3   # cubic\n\nkernel.family=checkerboard\n");
  CHECK(c.p == 3.0);
  CHECK(c.kernel_family == "checkerboard");
  CHECK_THROWS_AS(ExperimentConfig::parse("frac.q = 1\n"), ValidationError);
  CHECK_THROWS_AS(ExperimentConfig::parse("frac.p = three\n"), ValidationError);
  CHECK_THROWS_AS(ExperimentConfig::parse("domain.M 12\n"), ValidationError);
  CHECK_THROWS_AS(ExperimentConfig::parse("sweep.n = 1,x\n"), ValidationError);
}

TEST_CASE("config validation names the violated precondition") {
  auto expect = [](const std::string& text, const std::string& fragment) {
    try {
      ExperimentConfig::parse(text).validate();
      FAIL("no error for " << text);
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  expect("domain.R = 0.5\n", "truncation radius");
  expect("frac.s = 1.2\n", "s must lie");
  expect("frac.p = 1\n", "p must lie");
  expect("kernel.family = zigzag\n", "unknown kernel");
  expect("kernel.family = checkerboard\ndomain.M = 63\nkernel.n = 8\n", "aliasing");
  expect("load.name = nope\n", "unknown load");
  expect("reference = getoor\nfrac.p = 3\n", "getoor");
  CHECK_NOTHROW(ExperimentConfig{}.validate());
}

TEST_CASE("named and tabulated loads") {
  TempDir tmp;
  ExperimentConfig c;
  c.load_name = "sin_pi";
  c.load_value = 2.0;
  CHECK(c.load_density()(0.5) == doctest::Approx(2.0));
  const fs::path table = write_config(tmp.path, "load.csv", "x,f\n-1,0\n0,2\n1,4\n");
  c.load_name = "table";
  c.load_table = table.string();
  c.load_value = 1.0;
  c.validate();
  const auto f = c.load_density();
  CHECK(f(-0.5) == doctest::Approx(1.0));
  CHECK(f(0.25) == doctest::Approx(2.5));
}

TEST_CASE("solve writes the Getoor comparison and embeds the manifest hash") {
  TempDir tmp;
  const auto cfg = write_config(tmp.path, "g.cfg",
                                "domain.M = 128\nload.name = constant\nload.value = 3.141592653589793\n"
                                "reference = getoor\n");
  REQUIRE(run("solve", cfg, tmp.path / "out") == kOk);
  const auto doc = read_json(tmp.path / "out" / "solve.json");
  REQUIRE(doc.contains("l2_error"));
  CHECK(doc["l2_error"].get<double>() <= 1e-2);
  const std::string hash = doc["manifest_hash"];
  CHECK(hash.size() == 16);
  CHECK(slurp(tmp.path / "out" / "solution.csv").rfind("# manifest " + hash + "\n", 0) == 0);
  const auto man = read_json(tmp.path / "out" / "manifest_solve.json");
  CHECK(man["manifest_hash"] == hash);
  CHECK(man["exit_code"] == 0);
  CHECK(!man.contains("started"));
  CHECK(ExperimentConfig::load(tmp.path / "out" / "config.txt").M == 128);
  CHECK_FALSE(fs::exists(tmp.path / "out" / ".fraclab.lock"));
}

TEST_CASE("zero load gives the zero solution") {
  TempDir tmp;
  const auto cfg = write_config(tmp.path, "z.cfg", "domain.M = 31\nframe = 1\n");
  CHECK(run("solve", cfg, tmp.path / "bad") == kValidation);
  const auto cfg0 = write_config(tmp.path, "z0.cfg", "domain.M = 31\nload.value = 0\nfrac.p = 3\n");
  REQUIRE(run("solve", cfg0, tmp.path / "out") == kOk);
  std::ifstream in(tmp.path / "out" / "solution.csv");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(line.substr(line.rfind(',') + 1) == "0");
    ++rows;
  }
  CHECK(rows == 31);
}

TEST_CASE("identical configurations give identical files") {
  TempDir tmp;
  const auto cfg = write_config(tmp.path, "d.cfg", "domain.M = 63\nfrac.p = 3\nkernel.family = separable-cosine\n");
  REQUIRE(run("solve", cfg, tmp.path / "a") == kOk);
  REQUIRE(run("solve", cfg, tmp.path / "b") == kOk);
  for (const char* f : {"solution.csv", "solve.json", "manifest_solve.json"})
    CHECK(slurp(tmp.path / "a" / f) == slurp(tmp.path / "b" / f));
}

TEST_CASE("exit codes") {
  TempDir tmp;
  std::string err;
  const auto bad = write_config(tmp.path, "bad.cfg", "domain.R = 0.5\n");
  CHECK(run("solve", bad, tmp.path / "o1", &err) == kValidation);
  CHECK(err.find("truncation radius") != std::string::npos);

  const auto alias = write_config(tmp.path, "alias.cfg", "kernel.family = checkerboard\ndomain.M = 63\nsweep.n = 1,2,16\n");
  CHECK(run("homogenize", alias, tmp.path / "o2", &err) == kValidation);
  CHECK(err.find("aliasing") != std::string::npos);

  const auto slow = write_config(tmp.path, "slow.cfg", "domain.M = 63\nfrac.p = 3\nsolver.max_iter = 1\nsolver.tol = 1e-14\n");
  CHECK(run("solve", slow, tmp.path / "o3") == kSolver);

  const auto plain = write_config(tmp.path, "plain.cfg", "domain.M = 31\nkernel.family = checkerboard\nsweep.n = 1,2\n");
  CHECK(run("gamma", plain, tmp.path / "o4", &err) == kMissingUpstream);
  CHECK(err.find("homogenize") != std::string::npos);

  CHECK(run("transmogrify", plain, tmp.path / "o5") == kValidation);

  fs::create_directories(tmp.path / "locked");
  std::ofstream(tmp.path / "locked" / ".fraclab.lock") << "1\n";
  CHECK(run("solve", plain, tmp.path / "locked", &err) == kValidation);
  CHECK(err.find("locked") != std::string::npos);
}

TEST_CASE("homogenize with a constant kernel recovers it; gamma consumes the table") {
  TempDir tmp;
  const auto cfg = write_config(tmp.path, "c.cfg",
                                "domain.M = 63\ndomain.depth = 6\nkernel.family = constant\nkernel.c = 1.5\n"
                                "sweep.n = 1,2,4\nsweep.compare_n = 2\nsweep.table_spacing = 0.0625\n");
  const fs::path out = tmp.path / "out";
  REQUIRE(run("homogenize", cfg, out) == kOk);
  const auto doc = read_json(out / "homogenize.json");
  CHECK(doc["corridor"]["passed"] == true);
  CHECK(doc["effective_kernel"]["min_value"].get<double>() == doctest::Approx(1.5).epsilon(1e-2));
  for (const auto& loop : doc["closed_loop"])
    CHECK(loop["limit_residual"].get<double>() <= loop["limit_tol"].get<double>());
  for (const char* f : {"sweep.csv", "probes.csv", "solutions.csv", "divcurl.csv", "effective_kernel.csv",
                        "closed_loop.csv"})
    CHECK(fs::exists(out / f));

  std::string hash;
  const EffectiveKernel k = read_effective_kernel((out / "effective_kernel.csv").string(), &hash);
  CHECK(hash == doc["manifest_hash"]);
  CHECK(k.masked > 0);
  CHECK(k.min_value == doctest::Approx(1.5).epsilon(1e-2));

  REQUIRE(run("gamma", cfg, out) == kOk);
  const auto g = read_json(out / "gamma.json");
  CHECK(g["passed"] == true);
  CHECK(g["upstream_matches"] == true);
  CHECK(!g.contains("negative_control"));
}

TEST_CASE("gamma against a supplied limit kernel and the negative control") {
  TempDir tmp;
  const auto cfg = write_config(tmp.path, "g.cfg",
                                "domain.M = 63\ndomain.depth = 6\nkernel.family = checkerboard\nsweep.n = 1,2,4\n"
                                "gamma.limit_kernel = constant:2\n");
  REQUIRE(run("gamma", cfg, tmp.path / "out") == kOk);
  const auto g = read_json(tmp.path / "out" / "gamma.json");
  CHECK(g["passed"] == false);
  CHECK(g["negative_control"]["rejected"] == true);
  const auto bad = write_config(tmp.path, "b.cfg", "domain.M = 63\ngamma.limit_kernel = constant:x\n");
  CHECK(run("gamma", bad, tmp.path / "o2") == kValidation);
}

TEST_CASE("verify runs every property suite") {
  TempDir tmp;
  const auto cfg = write_config(tmp.path, "v.cfg",
                                "domain.M = 63\ndomain.depth = 6\nfrac.p = 3\nkernel.family = radial-bump\n"
                                "verify.simon_samples = 20000\n");
  REQUIRE(run("verify", cfg, tmp.path / "out") == kOk);
  const auto v = read_json(tmp.path / "out" / "verify.json");
  CHECK(v["passed"] == true);
  std::set<std::string> names;
  for (const auto& p : v["properties"]) names.insert(p["property"].get<std::string>());
  for (const char* n : {"kernel", "ibp", "simon_p1.5", "simon_p4", "poincare", "minimizer", "bounds", "uniqueness"})
    CHECK(names.count(n) == 1);
}

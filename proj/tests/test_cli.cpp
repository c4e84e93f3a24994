#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cli.hpp"
#include "phaselab/snapshot.hpp"

namespace fs = std::filesystem;
using phaselab::cli::run;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("phaselab_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_cfg(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

nlohmann::json load(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

// Runs the CLI with stderr captured.
int run_quiet(const std::vector<std::string>& args, std::string* err = nullptr) {
  std::ostringstream cap;
  auto* old = std::cerr.rdbuf(cap.rdbuf());
  const int code = run(args);
  std::cerr.rdbuf(old);
  if (err) *err = cap.str();
  return code;
}

}  // namespace

TEST_CASE("solve: constant data and the 1-D profile") {
  const auto dir = scratch("solve");
  auto cfg = write_cfg(dir, "dim = 2\nshape = 15,15\nh = 0.2\nbc = well:1\n");
  REQUIRE(run_quiet({"solve", "-c", cfg.string(), "-o", (dir / "const").string()}) == 0);
  const auto f = phaselab::read_snapshot((dir / "const" / "field.fld").string());
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(f.at(i)[0] == 1.0);
  CHECK(fs::exists(dir / "const" / "resolved.cfg"));
  const auto manifest = load(dir / "const" / "manifest.json");
  CHECK(manifest["config_hash"].get<std::string>().size() == 16);
  CHECK(manifest["command"] == "solve");

  cfg = write_cfg(dir, "dim = 1\nshape = 201\nh = 0.1\nbc = halfspace:0,1\ndescent_tol = 1e-7\n");
  REQUIRE(run_quiet({"solve", "-c", cfg.string(), "-o", (dir / "tanh").string()}) == 0);
  const auto rep = load(dir / "tanh" / "solve.json");
  CHECK(rep["converged"] == true);
  CHECK(rep["energy_monotone"] == true);
  CHECK(std::abs(rep["energy"].get<double>() - 2 * std::sqrt(2.0) / 3) <= 1e-3);
}

TEST_CASE("config errors exit with 2 and name the key") {
  const auto dir = scratch("badkey");
  const auto cfg = write_cfg(dir, "dim = 2\nshape = 15,15\nh = 0.2\nbc = well:1\ncolour = red\n");
  std::string err;
  CHECK(run_quiet({"solve", "-c", cfg.string(), "-o", dir.string()}, &err) == 2);
  CHECK(err.find("colour") != std::string::npos);
  CHECK(run_quiet({"solve", "-c", (dir / "none.cfg").string()}) == 2);
  CHECK(run_quiet({"frobnicate"}) == 2);
}

TEST_CASE("solve reports non-convergence with 3") {
  const auto dir = scratch("noconv");
  const auto cfg = write_cfg(dir, "dim = 1\nshape = 201\nh = 0.1\nbc = halfspace:0,1\nmax_iters = 5\n");
  CHECK(run_quiet({"solve", "-c", cfg.string(), "-o", dir.string()}) == 3);
  CHECK(load(dir / "solve.json")["converged"] == false);
}

TEST_CASE("measure: missing snapshot, constant field, radii off the grid") {
  const auto dir = scratch("measure");
  auto cfg = write_cfg(dir, "snapshot = " + (dir / "nope.fld").string() + "\nradii = 1,2\nwell = 1\n");
  CHECK(run_quiet({"measure", "-c", cfg.string(), "-o", dir.string()}) == 4);

  const auto sc = write_cfg(dir, "dim = 2\nshape = 41,41\nh = 0.25\nbc = well:1\n");
  REQUIRE(run_quiet({"solve", "-c", sc.string(), "-o", (dir / "const").string()}) == 0);
  cfg = write_cfg(dir, "snapshot = " + (dir / "const" / "field.fld").string() + "\nradii = 1:4:0.5\nwell = 1\n");
  REQUIRE(run_quiet({"measure", "-c", cfg.string(), "-o", (dir / "m").string()}) == 0);
  const auto rep = load(dir / "m" / "measure.json");
  for (const auto& row : rep["radii"]) {
    CHECK(row["V"]["value"] == 0.0);
    CHECK(row["A"] == 0.0);
    CHECK(row["J"] == 0.0);
  }
  CHECK(rep["fit_V"]["exponent"].is_null());
  CHECK(rep["lower_bound"]["skipped"] == true);

  cfg = write_cfg(dir, "snapshot = " + (dir / "const" / "field.fld").string() + "\nradii = 2,8\nwell = 1\n");
  std::string err;
  CHECK(run_quiet({"measure", "-c", cfg.string(), "-o", (dir / "big").string()}, &err) == 4);
  CHECK_FALSE(err.empty());
}

TEST_CASE("connect, then cyl guards lambda") {
  const auto dir = scratch("connect");
  const auto cfg = write_cfg(dir, "potential = two_well\nL = 10\nN = 401\ndirections = 4\nq_max = 0.5\nq_step = 0.1\n");
  REQUIRE(run_quiet({"connect", "-c", cfg.string(), "-o", (dir / "e").string()}) == 0);
  const auto rep = load(dir / "e" / "connect.json");
  CHECK(rep["hyperbolic"] == true);
  CHECK(rep["lambda_star"].get<double>() > 0.0);
  CHECK(std::abs(rep["eta"]["value"].get<double>() - 1.5) <= 0.02);

  const auto cyl = write_cfg(dir, "connection = " + (dir / "e").string() + "\nlambda = 5\n");
  CHECK(run_quiet({"cyl", "-c", cyl.string(), "-o", (dir / "c").string()}) == 6);
  const auto none = write_cfg(dir, "connection = " + (dir / "missing").string() + "\n");
  CHECK(run_quiet({"cyl", "-c", none.string(), "-o", (dir / "c").string()}) != 0);
}

TEST_CASE("hypcheck flags the straight saddle of the ring potential") {
  const auto dir = scratch("hyp");
  auto cfg = write_cfg(dir, "potential = two_well\nN = 401\nsamples = 512\n");
  CHECK(run_quiet({"hypcheck", "-c", cfg.string(), "-o", (dir / "w").string()}) == 0);
  cfg = write_cfg(dir, "potential = ring\nanisotropy = 0.05\nL = 12\nN = 601\nsamples = 512\n");
  CHECK(run_quiet({"hypcheck", "-c", cfg.string(), "-o", (dir / "r").string()}) == 5);
  CHECK(load(dir / "r" / "hypcheck.json")["connection"]["hyperbolic"] == false);
}

TEST_CASE("link writes level sets and the Hausdorff table") {
  const auto dir = scratch("link");
  const auto cfg = write_cfg(dir, "h = 0.05\neps = 0.4,0.2\ndescent_tol = 1e-6\nlattice = 0.2\n");
  REQUIRE(run_quiet({"link", "-c", cfg.string(), "-o", dir.string()}) == 0);
  const auto rep = load(dir / "link.json");
  REQUIRE(rep["steps"].size() == 2);
  CHECK(rep["oracle"]["chord_minimal"] == true);
  CHECK(fs::exists(dir / "levelset_1.csv"));
  CHECK(rep["steps"][1]["hausdorff"]["value"].get<double>() <= rep["steps"][1]["hausdorff"]["tolerance"].get<double>());
}

TEST_CASE("deterministic reruns are byte-identical across thread counts") {
  const auto dir = scratch("det");
  const auto cfg = write_cfg(dir, "dim = 2\nshape = 61,61\nh = 0.2\nbc = halfspace:0,1\nnoise = 0.1\nseed = 3\n");
  REQUIRE(run_quiet({"--threads", "1", "--deterministic", "solve", "-c", cfg.string(), "-o", (dir / "a").string()}) == 0);
  REQUIRE(run_quiet({"--threads", "4", "--deterministic", "solve", "-c", cfg.string(), "-o", (dir / "b").string()}) == 0);
  for (const char* name : {"field.fld", "solve.json", "log.csv", "resolved.cfg"})
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
}

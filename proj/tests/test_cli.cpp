#include "doctest.h"

#include <fstream>
#include <sstream>

#include "config.hpp"
#include "stages.hpp"

using namespace wavelab::cli;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "case");
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("wavelab_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("config defaults and lists") {
  const auto c = parse("[manifold]\ndeltas = 1e-5, 2e-6\n[run]\nstages = chart, norms\nseed = 42\n");
  CHECK(c.potential.family == "power_law");
  CHECK(c.grid.n == 4096);
  REQUIRE(c.manifold.deltas.size() == 2);
  CHECK(c.manifold.deltas[1] == 2e-6);
  CHECK(c.run.stages == std::vector<std::string>{"chart", "norms"});
  CHECK(c.run.seed == 42);
  CHECK(c.output_dir == "case");
  CHECK(c.echo.at("manifold.deltas") == "1e-5, 2e-6");
}

TEST_CASE("every offending field is reported") {
  try {
    parse("[grid]\nn = 8\nwidth = 3\n[evolve]\ncfl = fast\nt_end = -1\n[potential]\nfamily = cubic\n");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const auto& is = e.issues();
    auto has = [&](const std::string& prefix) {
      return std::any_of(is.begin(), is.end(), [&](const std::string& s) { return s.rfind(prefix, 0) == 0; });
    };
    CHECK(has("grid.n"));
    CHECK(has("grid.width"));
    CHECK(has("evolve.cfl"));
    CHECK(has("evolve.t_end"));
    CHECK(has("potential.family"));
  }
  CHECK_THROWS_AS(parse("[run]\nstages = steady-find, warp\n"), ConfigError);
  CHECK_THROWS_AS(parse("[output]\ndir = ../escape\n"), ConfigError);
  CHECK_THROWS_AS(parse("[grid\nn = 4\n"), ConfigError);
}

TEST_CASE("auto-sized grid covers the longest run") {
  const auto c = parse("[grid]\nauto_size = true\n[evolve]\nt_end = 90\n");
  CHECK(c.grid.r_max == doctest::Approx(120.0));
}

TEST_CASE("stage closure follows dependencies") {
  CHECK(stage_closure({"onepass"}) == std::vector<std::string>{"steady-find", "spectrum", "manifold-shoot", "onepass"});
  CHECK(stage_closure({"all"}).size() == stage_names().size());
  CHECK_THROWS_AS(stage_closure({"nope"}), UnknownExperiment);
}

TEST_CASE("describe names what each experiment verifies") {
  CHECK(describe("onepass").find("Theorem 4.2") != std::string::npos);
  CHECK(describe("channel-scan").find("Lemma 3.3") != std::string::npos);
  CHECK(describe("run").find("steady-find") != std::string::npos);
  try {
    describe("chanel-scan");
    FAIL("expected UnknownExperiment");
  } catch (const UnknownExperiment& e) {
    REQUIRE(!e.alternatives().empty());
    CHECK(e.alternatives().front() == "channel-scan");
  }
}

TEST_CASE("no potential: unstable-mode stages are skipped") {
  const auto root = scratch("minimal");
  const auto c = parse(
      "[potential]\nfamily = zero\nV0 = 0\n[grid]\nn = 512\nauto_size = true\n"
      "[run]\nstages = manifold-shoot, channel-scan, onepass\n[output]\ndir = m\n");
  const auto out = run_pipeline(c, c.run.stages, root);
  CHECK(out.exit_code == 0);
  CHECK(out.manifest["success"] == true);
  for (const auto& st : out.manifest["stages"]) {
    const auto name = st["name"].get<std::string>();
    if (name == "steady-find" || name == "spectrum") {
      CHECK(st["status"] == "ok");
    } else {
      CHECK(st["status"] == "skipped");
      CHECK(st["cause"] == "no unstable states");
    }
  }
  CHECK(fs::exists(root / "m" / "manifest.json"));
  CHECK(fs::exists(root / "m" / "steady_states.json"));
  fs::remove_all(root);
}

TEST_CASE("a failing stage is recorded and replaces an old success manifest") {
  const auto root = scratch("failing");
  fs::create_directories(root / "f");
  { std::ofstream(root / "f" / "manifest.json") << "{\"success\": true}\n"; }
  // r_max 20 cannot hold a run of length 30
  const auto c = parse(
      "[potential]\nfamily = zero\n[grid]\nn = 256\nr_max = 20\n[evolve]\nt_end = 30\n"
      "[run]\nstages = evolve\n[output]\ndir = f\n");
  const auto out = run_pipeline(c, c.run.stages, root);
  CHECK(out.exit_code == 2);
  CHECK(out.manifest["success"] == false);
  const auto& last = out.manifest["stages"].back();
  CHECK(last["name"] == "evolve");
  CHECK(last["status"] == "failed");
  CHECK(last["cause"].get<std::string>().find("r_max") != std::string::npos);
  CHECK(slurp(root / "f" / "manifest.json").find("\"success\": false") != std::string::npos);
  fs::remove_all(root);
}

TEST_CASE("outputs do not depend on the number of workers") {
  const auto root = scratch("determinism");
  const std::string base =
      "[grid]\nn = 1024\nr_max = 60\n[norms]\ndraws = 6\nt_end = 4\n"
      "[manifold]\nchart_lambdas = -1e-4, 1e-4\nchart_amplitudes = 0\n[run]\nstages = chart, norms\n";
  const auto one = parse(base + "workers = 1\n[output]\ndir = a\n");
  const auto three = parse(base + "workers = 3\n[output]\ndir = b\n");
  REQUIRE(run_pipeline(one, one.run.stages, root).exit_code == 0);
  REQUIRE(run_pipeline(three, three.run.stages, root).exit_code == 0);
  for (const auto& name : {"chart.csv", "chart.json", "norms.json", "spectrum.json", "steady_states.json"}) {
    CAPTURE(name);
    CHECK(slurp(root / "a" / name) == slurp(root / "b" / name));
  }
  fs::remove_all(root);
}

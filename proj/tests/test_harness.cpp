#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "msee/errors.hpp"
#include "msee/harness.hpp"

using namespace msee;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("msee_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool mentions(const std::vector<std::string>& problems, const std::string& text) {
  for (const auto& p : problems)
    if (p.find(text) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("config parsing and validation") {
  ExperimentConfig c = ExperimentConfig::parse_string(
      "[experiment]\nname = porous_medium_demo\n[problem]\np = 3\n[output]\ndir = x\n");
  CHECK(c.num("problem.p") == 3.0);
  CHECK(c.num("numerics.dt") == 0.001);
  CHECK(validate_config(c).empty());

  c.set("problem.p=1.5");
  CHECK(mentions(validate_config(c), "problem.p"));
  c.set("problem.p", "4");
  CHECK(c.num("problem.p") == 4.0);

  c.set("problem.bogus", "1");
  CHECK(mentions(validate_config(c), "problem.bogus"));

  const ExperimentConfig empty = ExperimentConfig::parse_string("");
  const auto problems = validate_config(empty);
  CHECK(mentions(problems, "experiment.name"));
  CHECK(mentions(problems, "output.dir"));

  CHECK_THROWS_AS(c.set("no_equals_sign"), ConfigError);
  c.set("numerics.n_modes", "abc");
  CHECK(mentions(validate_config(c), "numerics.n_modes"));
}

TEST_CASE("output root prefixes relative directories") {
  const ExperimentConfig c = ExperimentConfig::parse_string("[output]\ndir = rel\n");
  ::setenv("MSEE_OUTPUT_ROOT", "/tmp/root", 1);
  CHECK(c.output_dir() == fs::path("/tmp/root/rel"));
  ::unsetenv("MSEE_OUTPUT_ROOT");
  CHECK(c.output_dir() == fs::path("rel"));
}

TEST_CASE("bihari table run and manifest") {
  const fs::path dir = scratch("bihari");
  ExperimentConfig c = ExperimentConfig::parse_string(
      "[experiment]\nname = bihari_table\n[problem]\nmodulus = linear\n[numerics]\ndt = 0.01\n");
  c.set("output.dir", dir.string());
  const RunOutcome out = run_experiment(c);
  REQUIRE(out.status == RunStatus::Passed);

  std::ifstream csv(dir / "bound.csv");
  std::string line, last;
  std::getline(csv, line);
  CHECK(line == "t,lambda,Lambda,bound\r");
  while (std::getline(csv, line))
    if (line.size() > 1) last = line;
  std::vector<double> row;
  std::stringstream ss(last);
  for (std::string cell; std::getline(ss, cell, ',');) row.push_back(std::stod(cell));
  REQUIRE(row.size() == 4);
  CHECK(row[0] == doctest::Approx(1.0));
  CHECK(row[3] == doctest::Approx(std::exp(1.0)).epsilon(1e-10));

  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["status"] == "passed");
  CHECK(m["experiment"] == "bihari_table");
  CHECK(m["code_version"] == code_version());
  CHECK(m["config"]["numerics.dt"] == "0.01");
}

TEST_CASE("manifest is written for failed runs") {
  const fs::path dir = scratch("failed");
  ExperimentConfig c = ExperimentConfig::parse_string("[experiment]\nname = bihari_table\n");
  c.set("output.dir", dir.string());
  c.set("problem.unknown_key", "1");
  const RunOutcome out = run_experiment(c);
  CHECK(out.status == RunStatus::Error);
  REQUIRE(fs::exists(dir / "manifest.json"));
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["status"] == "error");
  CHECK(m["error"].get<std::string>().find("unknown_key") != std::string::npos);

  ExperimentConfig nope = ExperimentConfig::parse_string("[experiment]\nname = nonexistent\n");
  nope.set("output.dir", scratch("nope").string());
  CHECK(run_experiment(nope).status == RunStatus::Error);
}

TEST_CASE("same seed gives identical CSV bytes") {
  const auto run = [](const std::string& tag, const std::string& threads) {
    const fs::path dir = scratch(tag);
    ExperimentConfig c = ExperimentConfig::parse_string(
        "[experiment]\nname = porous_medium_demo\n[problem]\nn_grid = 16\nT = 0.25\n"
        "[numerics]\nn_modes = 4\ndt = 0.01\nsamples = 20\n[monte_carlo]\nreplicas = 6\nseed = 7\n");
    c.set("output.dir", dir.string());
    c.set("monte_carlo.threads", threads);
    REQUIRE(run_experiment(c).status == RunStatus::Passed);
    return dir;
  };
  const fs::path a = run("det_a", "1"), b = run("det_b", "4");
  for (const char* f : {"path_replica0.csv", "moments.csv"}) {
    const std::string x = slurp(a / f);
    CHECK_FALSE(x.empty());
    CHECK(x == slurp(b / f));
  }
}

TEST_CASE("pool and summation") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(1000, 8, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) CHECK(h.load() == 1);
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });

  std::vector<double> v(1 << 20, 0.1);
  CHECK(pairwise_sum(v) == doctest::Approx(0.1 * v.size()).epsilon(1e-14));
  std::vector<double> w{1e16, 1.0, -1e16, 1.0};
  CHECK(std::isfinite(pairwise_sum(w)));
  CHECK(pairwise_sum(nullptr, 0) == 0.0);
  CHECK(find_experiment("bihari_table") != nullptr);
  CHECK(experiment_registry().size() == 11);
}

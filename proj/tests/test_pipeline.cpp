#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pcd/error.hpp"
#include "pcd/pipeline.hpp"

using namespace pcd;
namespace fs = std::filesystem;

namespace {

RunConfig quick() {
  RunConfig cfg;
  cfg.scenarios = {Scenario::Origin, Scenario::Pcd};
  cfg.methods = {"ochiai", "gp02"};
  cfg.epochs = 15;
  cfg.patience = 15;
  cfg.sample_steps = 10;
  cfg.seed = 5;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("origin only trains nothing") {
  RunConfig cfg = quick();
  cfg.scenarios = {Scenario::Origin, Scenario::Undersample, Scenario::Resample};
  const auto res = run_versions({golden_version()}, cfg);
  CHECK(res.models_trained == 0);
  CHECK(!res.any_error());
  CHECK(res.report.rows.size() == 6);  // 3 scenarios x 2 methods
  const auto& v = res.versions.at(0);
  CHECK(v.stm_sc.empty());  // context is only computed when something needs it
  for (const auto& [name, aug] : v.datasets)
    if (name != "origin") CHECK(aug.data.failing() == aug.data.passing());
}

TEST_CASE("two scenarios by two methods give four rows; a bad version is isolated") {
  auto broken = golden_version();
  broken.id = "no-failures";
  broken.program = broken.reference;
  const auto cfg = quick();
  const auto res = run_versions({golden_version(), broken}, cfg);
  CHECK(res.report.rows.size() == 4);
  REQUIRE(res.report.errors.size() == 1);
  CHECK(res.report.errors[0].rfind("no-failures: ", 0) == 0);
  CHECK(res.any_error());
  CHECK(res.models_trained == 1);
  for (const auto& row : res.report.rows) CHECK(row.versions == 1);

  const auto& g = res.versions.at(0);
  CHECK(g.error.empty());
  CHECK(g.stm_sc == std::vector<StmtIndex>{1, 3, 7, 8, 14, 15});
  CHECK(g.datasets.at("pcd").synthetic_count() == 2);
  CHECK(g.results.count("pcd/gp02/full") == 1);
}

TEST_CASE("reports are byte-identical across runs and thread counts") {
  auto cfg = quick();
  cfg.eval_space = EvalSpace::Both;
  const auto a = fs::temp_directory_path() / "pcd_test_pipeline_a";
  const auto b = fs::temp_directory_path() / "pcd_test_pipeline_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const auto v = golden_version();
  const auto ra = run_versions({v, v}, cfg);
  emit_report(ra, cfg, a.string());
  cfg.jobs = 2;
  const auto rb = run_versions({v, v}, cfg);
  emit_report(rb, cfg, b.string());
  for (const char* f : {"report.json", "report.txt", "rimp.csv"}) {
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(ra.report.rows.size() == 8);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("unwritable output directory") {
  const auto res = run_versions({golden_version()}, [] {
    auto c = quick();
    c.scenarios = {Scenario::Origin};
    return c;
  }());
  const auto file = fs::temp_directory_path() / "pcd_test_pipeline_file";
  { std::ofstream(file) << "x"; }
  CHECK_THROWS_AS(emit_report(res, quick(), (file / "sub").string()), IoError);
  fs::remove(file);
}

TEST_CASE("config validation and files") {
  auto cfg = quick();
  cfg.methods = {"tarantula"};
  CHECK_THROWS_AS(run_versions({golden_version()}, cfg), ConfigError);
  cfg = quick();
  cfg.op = "SGD";
  CHECK_THROWS_AS(run_versions({golden_version()}, cfg), ConfigError);

  const auto path = fs::temp_directory_path() / "pcd_test_pipeline.cfg";
  { std::ofstream(path) << "# table values\nsteps = 500\nlr = 0.001\nalpha = 0.5\nscenarios = origin,pcd\n"; }
  RunConfig rc;
  apply_config_file(rc, path.string());
  CHECK(rc.steps == 500);
  CHECK(rc.lr == 0.001);
  CHECK(rc.alpha == 0.5);
  CHECK(rc.scenarios == std::vector<Scenario>{Scenario::Origin, Scenario::Pcd});
  { std::ofstream(path) << "bogus = 1\n"; }
  CHECK_THROWS_AS(apply_config_file(rc, path.string()), ConfigError);
  fs::remove(path);
  CHECK(eval_space_from_string(to_string(EvalSpace::Both)) == EvalSpace::Both);
}

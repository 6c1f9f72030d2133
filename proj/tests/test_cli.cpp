#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "streco/experiment.hpp"

using namespace streco;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.nx = 8;
  cfg.nt = 8;
  cfg.omega_a = 0.25;
  cfg.omega_b = 0.75;
  cfg.out_dir = out_dir;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config text parsing") {
  SUBCASE("empty text yields the defaults") {
    const ExperimentConfig cfg = parse_config_text("");
    CHECK(cfg.nx == 16);
    CHECK(cfg.formulation == "mf");
    CHECK(cfg.solver == "direct");
    CHECK(cfg.weight_kind == "unit");
  }

  SUBCASE("sections, comments and values") {
    const ExperimentConfig cfg = parse_config_text(
        "# comment\n"
        "[grid]\n"
        "nx = 12\n"
        "nt = 10\n"
        "[formulation]\n"
        "name = mf4\n"
        "r1 = 0.25\n"
        "[observation]\n"
        "sigma = 1e-3\n");
    CHECK(cfg.nx == 12);
    CHECK(cfg.nt == 10);
    CHECK(cfg.formulation == "mf4");
    CHECK(cfg.r1 == doctest::Approx(0.25));
    CHECK(cfg.sigma == doctest::Approx(1e-3));
  }

  SUBCASE("unknown keys and malformed lines are rejected") {
    CHECK_THROWS_AS(parse_config_text("[grid]\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[nosuchsection]\nnx = 1\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text("[grid]\nno equals sign\n"),
                    ConfigError);
  }

  SUBCASE("range validation") {
    CHECK_THROWS_AS(parse_config_text("[formulation]\nalpha = 1.2\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text("[grid]\nnx = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[observation]\nquad_order = 9\n"),
                    ConfigError);
  }

  SUBCASE("serialization round trip") {
    ExperimentConfig cfg = small_config("x");
    cfg.formulation = "mf-alpha";
    cfg.alpha = 0.125;
    const ExperimentConfig back = parse_config_text(serialize_config(cfg));
    CHECK(back.nx == cfg.nx);
    CHECK(back.alpha == cfg.alpha);
    CHECK(back.formulation == cfg.formulation);
    CHECK(back.out_dir == cfg.out_dir);
  }
}

TEST_CASE("experiment run writes the artifact set") {
  TempDir tmp("streco_cli_artifacts");
  const RunOutcome out = run_experiment(small_config(tmp.path.string()));
  for (const char* name :
       {"manifest.txt", "truth.csv", "observation.csv", "reconstruction.csv",
        "diagnostics.csv", "multiplier.csv", "report.txt"})
    CHECK(fs::exists(tmp.path / name));
  CHECK(out.report.misfit_norm < out.report.obs_norm + 1e-12);
  CHECK(out.delta_h > 0.0);
}

TEST_CASE("identical configs give byte-identical CSV artifacts") {
  TempDir a("streco_cli_det_a"), b("streco_cli_det_b");
  ExperimentConfig ca = small_config(a.path.string());
  ca.sigma = 1e-3;
  ExperimentConfig cb = ca;
  cb.out_dir = b.path.string();
  run_experiment(ca);
  run_experiment(cb);
  for (const char* name : {"truth.csv", "observation.csv",
                           "reconstruction.csv", "multiplier.csv"})
    CHECK(slurp(a.path / name) == slurp(b.path / name));
}

TEST_CASE("refinement sweep improves misfit and shrinks the multiplier") {
  TempDir tmp("streco_cli_sweep");
  const SweepResult res = convergence_sweep(small_config(tmp.path.string()), 2);
  CHECK(res.error.empty());
  REQUIRE(res.rows.size() == 2);
  CHECK(res.rows[1].misfit < res.rows[0].misfit);
  CHECK(res.rows[1].lambda_norm < res.rows[0].lambda_norm);
  CHECK(fs::exists(res.csv_path));
}

TEST_CASE("a single-level sweep is rejected") {
  TempDir tmp("streco_cli_sweep1");
  CHECK_THROWS_AS(convergence_sweep(small_config(tmp.path.string()), 1),
                  ConfigError);
}

TEST_CASE("driver exit codes") {
  CHECK(run_experiment(std::string("definitely_missing.cfg")) ==
        kExitIoError);
  TempDir tmp("streco_cli_badcfg");
  fs::create_directories(tmp.path);
  const fs::path bad = tmp.path / "bad.cfg";
  std::ofstream(bad) << "[formulation]\nalpha = 1.5\n";
  CHECK(run_experiment(bad.string()) == kExitConfigError);
}

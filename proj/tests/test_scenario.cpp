#include "sobolev/errors.hpp"
#include "sobolev/scenario.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sobolev;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Small, fast version of a preset rooted in a per-test output directory.
Scenario small(const std::string& preset, const std::string& tag) {
  Scenario s = preset_scenario(preset);
  s.n_interior = {31, 31};
  s.tag = tag;
  return s;
}

fs::path out_root() {
  const char* env = std::getenv("SOBOLEV_OUT");
  return env && *env ? fs::path(env) : fs::path("out");
}

}  // namespace

TEST(Presets, AllLoadAndRoundTrip) {
  const auto names = preset_names();
  EXPECT_EQ(names.size(), 6u);
  for (const auto& n : names) {
    const Scenario s = preset_scenario(n);
    EXPECT_EQ(s.name, n);
    EXPECT_EQ(s.n_interior, (std::vector<int>{127, 127}));
    const Scenario back = Scenario::from_json(s.to_json());
    EXPECT_EQ(back.to_json(), s.to_json()) << n;
    EXPECT_NO_THROW(s.problem());
  }
  EXPECT_EQ(preset_scenario("gp-well", true).n_interior, (std::vector<int>{255, 255}));
  EXPECT_THROW(preset_scenario("nope"), ConfigError);
  EXPECT_EQ(preset_scenario("saddle").init.kind, InitStrategy::Kind::SecondOfA0);
  EXPECT_EQ(preset_scenario("baseline-compare").solver.method, Method::BaselineA0);
}

TEST(Scenario, JsonErrorsAreConfigErrors) {
  nlohmann::json j = preset_scenario("gp-well").to_json();
  j["model"]["variant"] = "quintic";
  EXPECT_THROW(Scenario::from_json(j), ConfigError);
  j = preset_scenario("gp-well").to_json();
  j["grid"]["n_interior"] = "many";
  EXPECT_THROW(Scenario::from_json(j), ConfigError);
  EXPECT_THROW(Scenario::load("/nonexistent/scenario.json"), ConfigError);
  j = preset_scenario("gp-well").to_json();
  j["model"]["beta"] = -1.0;
  EXPECT_THROW(Scenario::from_json(j).problem(), ConfigError);
}

TEST(Scenario, SaveLoadRoundTrip) {
  const Scenario s = small("hoi", "roundtrip");
  const fs::path p = out_root() / "roundtrip.json";
  fs::create_directories(out_root());
  s.save(p);
  EXPECT_EQ(Scenario::load(p).to_json(), s.to_json());
}

TEST(Scenario, RunDirectoryHonorsEnvironment) {
  const Scenario s = small("gp-well", "env");
  EXPECT_EQ(s.run_directory(), out_root() / "gp-well" / "env");
}

TEST(RunScenario, WritesArtifactsAndIsReproducible) {
  const Scenario s = small("gp-well", "artifacts");
  const ScenarioResult r = run_scenario(s);
  ASSERT_TRUE(r.ok) << r.error;
  for (const char* f : {"trace.csv", "state.csv", "reference.csv", "diagnostics.json",
                        "scenario.json"}) {
    EXPECT_TRUE(fs::exists(r.directory / f)) << f;
  }
  EXPECT_FALSE(fs::exists(r.directory / "error.json"));
  ASSERT_TRUE(r.lojasiewicz.has_value());
  EXPECT_TRUE(r.lojasiewicz->passed()) << r.lojasiewicz->summary();
  ASSERT_TRUE(r.certificate.has_value());
  EXPECT_TRUE(r.certificate->passed());
  const auto diag = nlohmann::json::parse(slurp(r.directory / "diagnostics.json"));
  EXPECT_TRUE(diag.contains("eigen_gap"));
  EXPECT_EQ(nlohmann::json::parse(slurp(r.directory / "scenario.json")).at("version"),
            version_string());

  const std::string first = slurp(r.directory / "trace.csv");
  const std::string state = slurp(r.directory / "state.csv");
  ASSERT_TRUE(run_scenario(s).ok);
  EXPECT_EQ(slurp(r.directory / "trace.csv"), first);
  EXPECT_EQ(slurp(r.directory / "state.csv"), state);
}

TEST(RunScenario, FailureWritesErrorJson) {
  Scenario s = small("baseline-compare", "diverge");
  s.model.beta = 100.0;
  s.solver.tau = StepSchedule::constant(1.0);
  s.reference.enabled = false;
  const ScenarioResult r = run_scenario(s);
  EXPECT_FALSE(r.ok);
  ASSERT_TRUE(fs::exists(r.directory / "error.json"));
  const auto j = nlohmann::json::parse(slurp(r.directory / "error.json"));
  EXPECT_EQ(j.at("type"), "divergence");
  EXPECT_TRUE(fs::exists(r.directory / "trace.csv"));
}

TEST(Sweep, RowsAndCsv) {
  Scenario s = small("gp-well", "sweep");
  s.reference.enabled = false;
  s.diagnostics.eigen_gap = false;
  const auto rows = sweep(s, "beta", {1.0, 10.0, -1.0}, 2);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].status, "converged");
  EXPECT_EQ(rows[1].status, "converged");
  EXPECT_EQ(rows[0].certificate, "pass");
  EXPECT_GT(rows[1].final_lambda, rows[0].final_lambda);
  EXPECT_EQ(rows[2].status, "error");
  EXPECT_FALSE(rows[2].error.empty());
  const fs::path csv = s.run_directory() / "sweep-beta.csv";
  ASSERT_TRUE(fs::exists(csv));
  const std::string text = slurp(csv);
  EXPECT_EQ(text.rfind("value,status,iterations,final_lambda,rate_c,certificate,error\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  EXPECT_TRUE(fs::exists(out_root() / "gp-well" / "sweep" / "sweep-beta" / "10" / "trace.csv"));

  EXPECT_TRUE(sweep(s, "beta", {}, 2, false).empty());
  EXPECT_THROW(sweep(s, "colour", {1.0}), ConfigError);
  EXPECT_EQ(with_axis(s, "tau", 0.5).solver.tau.at(0), 0.5);
}

TEST(Certify, RecomputesFromRunDirectory) {
  const Scenario s = small("gp-well", "certify");
  const ScenarioResult r = run_scenario(s);
  ASSERT_TRUE(r.ok);
  const CertifyResult c = certify_run(r.directory);
  ASSERT_TRUE(c.lojasiewicz.has_value()) << c.lojasiewicz_error;
  EXPECT_DOUBLE_EQ(c.lojasiewicz->C_L, r.lojasiewicz->C_L);
  EXPECT_DOUBLE_EQ(c.lojasiewicz->rate_c, r.lojasiewicz->rate_c);
  EXPECT_EQ(c.certificate.passed(), r.certificate->passed());
  EXPECT_TRUE(fs::exists(r.directory / "certify.json"));
  EXPECT_THROW(certify_run(out_root() / "missing"), ConfigError);
}

TEST(Saddle, SmallEscapeExperiment) {
  Scenario s = small("saddle", "small");
  s.saddle.max_iterations = 3000;
  const SaddleResult r = saddle_experiment(s, {1e-2}, 7);
  EXPECT_LT(r.hessian_smallest, 0.0);
  EXPECT_FALSE(r.saddle_certificate.passed());
  EXPECT_LT(r.saddle_grad_norm, 1e-8);
  ASSERT_EQ(r.runs.size(), 1u);
  const SaddleRun& run = r.runs[0];
  EXPECT_TRUE(run.down_then_up);
  EXPECT_GT(run.final_alignment, 1.0 - 1e-6);
  EXPECT_LT(run.final_dist_ground, 1e-3);
  EXPECT_GT(run.argmin, 0);
  EXPECT_NE(run.stop_reason, "energy_stall");
  EXPECT_EQ(run.dist_saddle.size(), run.energy.size());
  const fs::path dir = s.run_directory();
  EXPECT_TRUE(fs::exists(dir / "saddle.json"));
  EXPECT_TRUE(fs::exists(dir / "eps_0.01.csv"));
  EXPECT_EQ(slurp(dir / "eps_0.01.csv").rfind("iter,dist_saddle,dist_ground,energy\n", 0), 0u);

  Scenario bad = small("gp-well", "bad-saddle");
  EXPECT_THROW(saddle_experiment(bad, {1e-2}, 7, false), ConfigError);
}

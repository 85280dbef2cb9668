#pragma once

#include "sobolev/diagnostics.hpp"
#include "sobolev/solver.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sobolev {

struct PotentialConfig {
  PotentialKind kind = PotentialKind::SingleWell;
  DisorderSpec disorder;
  std::vector<double> values;  // Custom only
};

/// High-accuracy run on the same problem that supplies u* and E*.
struct ReferenceConfig {
  bool enabled = true;
  double grad_norm_tol = 1e-13;
  int max_iterations = 4000;
};

struct DiagnosticsConfig {
  bool lojasiewicz = true;
  double tail_fraction = 0.5;
  bool certificate = true;
  bool hessian = false;
  bool eigen_gap = true;
  bool norm_equivalence = false;
  int norm_samples = 16;
};

struct SaddleConfig {
  std::vector<double> epsilons{1e-2, 1e-3, 1e-4};
  std::uint64_t seed = 7;
  int max_iterations = 8000;
};

struct Scenario {
  std::string name = "gp-well";
  std::string tag = "default";
  int dim = 2;
  std::vector<std::pair<double, double>> bounds{{-1.0, 1.0}, {-1.0, 1.0}};
  std::vector<int> n_interior{127, 127};
  PotentialConfig potential;
  ModelParams model;
  SolverConfig solver;
  InitStrategy init;
  ReferenceConfig reference;
  DiagnosticsConfig diagnostics;
  SaddleConfig saddle;
  int jobs = 1;  // sweep parallelism
  std::string output_dir = "out";

  GridSpec grid() const;
  Problem problem() const;

  nlohmann::json to_json() const;
  static Scenario from_json(const nlohmann::json& j);
  static Scenario load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// <root>/<name>/<tag>, with root taken from SOBOLEV_OUT when set.
  std::filesystem::path run_directory() const;
};

std::vector<std::string> preset_names();
/// Built-in scenarios on a 127x127 grid, or 255x255 with paper_scale.
Scenario preset_scenario(const std::string& name, bool paper_scale = false);

std::string version_string();

nlohmann::json init_to_json(const InitStrategy& init);
InitStrategy init_from_json(const nlohmann::json& j);
nlohmann::json solver_to_json(const SolverConfig& config);
SolverConfig solver_from_json(const nlohmann::json& j);

struct ScenarioResult {
  bool ok = false;
  std::string error;
  std::filesystem::path directory;
  RunResult run;
  std::optional<RunResult> reference;
  double E_star = kNaN;
  std::optional<LojasiewiczReport> lojasiewicz;
  std::optional<GroundStateCertificate> certificate;
  nlohmann::json diagnostics;
};

/// Runs the reference (when enabled), the main run and the configured
/// diagnostics. With `write`, artifacts go to run_directory():
/// trace.csv, state.csv, reference.csv, diagnostics.json, scenario.json, or
/// error.json when the run fails.
ScenarioResult run_scenario(const Scenario& scenario, bool write = true);

/// Copy of `base` with one ModelParams/SolverConfig field replaced; axes are
/// beta, delta, alpha, tau, max_iterations, grad_norm_tol, energy_stall_tol.
Scenario with_axis(const Scenario& base, const std::string& axis, double value);

struct SweepRow {
  double value = 0.0;
  std::string status;  // converged | max_iterations | error
  int iterations = 0;
  double final_lambda = kNaN;
  double rate_c = kNaN;
  std::string certificate;  // pass | fail | n/a
  std::string error;
};

/// One scenario per value, `jobs` at a time. Cell failures land in the row.
std::vector<SweepRow> sweep(const Scenario& base, const std::string& axis,
                            const std::vector<double>& values, int jobs = 1,
                            bool write = true);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

struct SaddleRun {
  double epsilon = 0.0;
  int iterations = 0;
  std::string stop_reason;
  int argmin = 0;  // iteration of the smallest distance to u*
  double min_dist_saddle = kNaN;
  double final_dist_ground = kNaN;
  double final_alignment = kNaN;  // |(u_final, v)|
  bool down_then_up = false;
  std::vector<double> dist_saddle;
  std::vector<double> dist_ground;  // min(||u - v||, ||u + v||)
  std::vector<double> energy;
};

struct SaddleResult {
  State saddle;
  int saddle_iterations = 0;
  double saddle_grad_norm = kNaN;
  double saddle_residual = kNaN;
  double hessian_smallest = kNaN;
  GroundStateCertificate saddle_certificate;
  State ground;
  std::vector<SaddleRun> runs;

  nlohmann::json to_json() const;
};

/// u* from the unperturbed init (scenario.init must be second_of_A0), the
/// ground state from ground_of_A0, then one run per epsilon from
/// perturbed(second_of_A0, epsilon, seed). Writes saddle.json and
/// eps_<epsilon>.csv (iter,dist_saddle,dist_ground,energy).
SaddleResult saddle_experiment(const Scenario& scenario, const std::vector<double>& epsilons,
                               std::uint64_t seed, bool write = true);

struct CertifyResult {
  std::optional<LojasiewiczReport> lojasiewicz;
  std::string lojasiewicz_error;
  GroundStateCertificate certificate;
  nlohmann::json to_json() const;
};

/// Recomputes the reports of a finished run directory; writes certify.json.
CertifyResult certify_run(const std::filesystem::path& directory, bool write = true);

}  // namespace sobolev

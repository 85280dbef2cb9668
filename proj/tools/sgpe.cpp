// Command-line front end: solve, sweep, certify, saddle, preset.

#include "sobolev/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace sobolev;

int cmd_solve(const std::string& path, const std::string& tag) {
  Scenario s = Scenario::load(path);
  if (!tag.empty()) s.tag = tag;
  const ScenarioResult r = run_scenario(s);
  if (!r.ok) {
    std::cerr << "solve failed: " << r.error << "\n  see " << (r.directory / "error.json").string()
              << '\n';
    return 1;
  }
  const auto& last = r.run.trace.records.back();
  std::printf("%s: %d iterations (%s), E=%.15g lambda=%.15g grad=%.3e\n", s.name.c_str(),
              r.run.trace.iterations, to_string(r.run.trace.stop_reason).c_str(), last.energy,
              last.lambda, last.grad_norm);
  if (r.lojasiewicz) std::printf("%s\n", r.lojasiewicz->summary().c_str());
  if (r.certificate) std::printf("%s\n", r.certificate->summary().c_str());
  std::printf("artifacts in %s\n", r.directory.string().c_str());
  return 0;
}

int cmd_sweep(const std::string& path, const std::string& axis, const std::vector<double>& values,
              int jobs) {
  const Scenario s = Scenario::load(path);
  const auto rows = sweep(s, axis, values, jobs > 0 ? jobs : s.jobs);
  write_sweep_csv(std::cout, rows);
  return 0;
}

int cmd_certify(const std::string& dir) {
  const CertifyResult r = certify_run(dir);
  if (r.lojasiewicz) {
    std::printf("%s\n", r.lojasiewicz->summary().c_str());
  } else {
    std::printf("lojasiewicz: %s\n", r.lojasiewicz_error.c_str());
  }
  std::printf("%s\n", r.certificate.summary().c_str());
  const bool ok = r.certificate.passed() && (!r.lojasiewicz || r.lojasiewicz->passed());
  return ok ? 0 : 1;
}

int cmd_saddle(const std::string& path, std::vector<double> eps, long long seed) {
  const Scenario s = Scenario::load(path);
  if (eps.empty()) eps = s.saddle.epsilons;
  const SaddleResult r =
      saddle_experiment(s, eps, seed >= 0 ? static_cast<std::uint64_t>(seed) : s.saddle.seed);
  std::printf("saddle u*: %d iterations, grad=%.3e residual=%.3e hessian_smallest=%.6g\n",
              r.saddle_iterations, r.saddle_grad_norm, r.saddle_residual, r.hessian_smallest);
  for (const auto& run : r.runs) {
    std::printf("eps=%g: %d iterations (%s), closest to u* at %d (%.3e), alignment %.8f%s\n",
                run.epsilon, run.iterations, run.stop_reason.c_str(), run.argmin,
                run.min_dist_saddle, run.final_alignment,
                run.down_then_up ? ", escaped" : "");
  }
  std::printf("artifacts in %s\n", s.run_directory().string().c_str());
  return 0;
}

int cmd_preset(const std::string& name, bool paper, const std::string& out) {
  const Scenario s = preset_scenario(name, paper);
  if (out.empty()) {
    std::cout << s.to_json().dump(2) << '\n';
  } else {
    s.save(out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sobolev projected gradient descent for Gross-Pitaevskii ground states"};
  app.set_version_flag("--version", sobolev::version_string());
  app.require_subcommand(1);

  std::string scenario, tag, axis, run_dir, preset, out;
  std::vector<double> values, eps;
  int jobs = 0;
  long long seed = -1;
  bool paper = false;

  auto* solve = app.add_subcommand("solve", "run one scenario and write its artifacts");
  solve->add_option("--scenario", scenario, "scenario JSON file")->required();
  solve->add_option("--tag", tag, "override the scenario tag (output subdirectory)");

  auto* sw = app.add_subcommand("sweep", "rerun a scenario over one parameter");
  sw->add_option("--scenario", scenario, "scenario JSON file")->required();
  sw->add_option("--axis", axis,
                 "beta|delta|alpha|tau|max_iterations|grad_norm_tol|energy_stall_tol")
      ->required();
  sw->add_option("--values", values, "comma-separated values")->delimiter(',');
  sw->add_option("--jobs", jobs, "cells run concurrently (default: scenario jobs)");

  auto* cert = app.add_subcommand("certify", "recompute reports for a finished run directory");
  cert->add_option("--run", run_dir, "run directory")->required();

  auto* sad = app.add_subcommand("saddle", "saddle escape experiment");
  sad->add_option("--scenario", scenario, "scenario JSON file with second_of_A0 init")
      ->required();
  sad->add_option("--eps", eps, "comma-separated perturbation sizes")->delimiter(',');
  sad->add_option("--seed", seed, "noise seed (default: scenario saddle.seed)");

  auto* pre = app.add_subcommand("preset", "print or save a built-in scenario");
  pre->add_option("--name", preset, "preset name")->required();
  pre->add_flag("--paper-scale", paper, "255x255 grid instead of 127x127");
  pre->add_option("--out", out, "write to this file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return cmd_solve(scenario, tag);
    if (*sw) return cmd_sweep(scenario, axis, values, jobs);
    if (*cert) return cmd_certify(run_dir);
    if (*sad) return cmd_saddle(scenario, eps, seed);
    if (*pre) return cmd_preset(preset, paper, out);
  } catch (const sobolev::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

#include "sobolev/scenario.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#ifndef SOBOLEV_VERSION
#define SOBOLEV_VERSION "unknown"
#endif

namespace sobolev {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version_string() { return std::string("sgpe ") + SOBOLEV_VERSION; }

namespace {

json nan_safe(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string potential_kind_name(PotentialKind k) {
  switch (k) {
    case PotentialKind::Zero: return "zero";
    case PotentialKind::SingleWell: return "single-well";
    case PotentialKind::Disordered: return "disordered";
    case PotentialKind::Custom: return "custom";
  }
  return "unknown";
}

PotentialKind potential_kind_from(const std::string& s) {
  if (s == "zero") return PotentialKind::Zero;
  if (s == "single-well") return PotentialKind::SingleWell;
  if (s == "disordered") return PotentialKind::Disordered;
  if (s == "custom") return PotentialKind::Custom;
  throw ConfigError("unknown potential kind '" + s + "'");
}

InitStrategy::Kind init_kind_from(const std::string& s) {
  for (auto k : {InitStrategy::Kind::GroundOfA0, InitStrategy::Kind::SecondOfA0,
                 InitStrategy::Kind::PositiveConstant, InitStrategy::Kind::Custom,
                 InitStrategy::Kind::Perturbed}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown init kind '" + s + "'");
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

std::string error_type(const std::exception& e) {
  if (dynamic_cast<const DivergenceError*>(&e)) return "divergence";
  if (dynamic_cast<const EigenSolverError*>(&e)) return "eigensolver";
  if (dynamic_cast<const SolverError*>(&e)) return "solver";
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const DiagnosticError*>(&e)) return "diagnostic";
  return "error";
}

}  // namespace

// ---- serialization --------------------------------------------------------

json init_to_json(const InitStrategy& init) {
  json j{{"kind", to_string(init.kind)}};
  if (init.kind == InitStrategy::Kind::Custom) {
    j["values"] = std::vector<double>(init.custom.data(), init.custom.data() + init.custom.size());
  }
  if (init.kind == InitStrategy::Kind::Perturbed) {
    j["base"] = init.base ? init_to_json(*init.base) : json(nullptr);
    j["epsilon"] = init.epsilon;
    j["seed"] = init.seed;
  }
  return j;
}

InitStrategy init_from_json(const json& j) {
  const auto kind = init_kind_from(j.at("kind").get<std::string>());
  switch (kind) {
    case InitStrategy::Kind::GroundOfA0: return InitStrategy::ground_of_A0();
    case InitStrategy::Kind::SecondOfA0: return InitStrategy::second_of_A0();
    case InitStrategy::Kind::PositiveConstant: return InitStrategy::positive_constant();
    case InitStrategy::Kind::Custom: {
      const auto v = j.at("values").get<std::vector<double>>();
      return InitStrategy::from_vector(Eigen::Map<const Vector>(v.data(), v.size()));
    }
    case InitStrategy::Kind::Perturbed:
      return InitStrategy::perturbed(init_from_json(j.at("base")), j.at("epsilon").get<double>(),
                                     get_or<std::uint64_t>(j, "seed", 0));
  }
  throw ConfigError("unknown init kind");
}

json solver_to_json(const SolverConfig& c) {
  return {{"method", to_string(c.method)},
          {"tau", c.tau.taus},
          {"tau_min", c.tau.tau_min},
          {"tau_max", c.tau.tau_max},
          {"max_iterations", c.max_iterations},
          {"grad_norm_tol", c.stop.grad_norm_tol},
          {"energy_stall_tol", c.stop.energy_stall_tol},
          {"stall_window", c.stop.stall_window},
          {"record_every", c.record_every},
          {"divergence_window", c.divergence_window},
          {"cg",
           {{"rel_tolerance", c.cg.rel_tolerance},
            {"max_iterations", c.cg.max_iterations},
            {"preconditioner", to_string(c.cg.preconditioner)}}}};
}

SolverConfig solver_from_json(const json& j) {
  SolverConfig c;
  c.method = method_from_string(get_or<std::string>(j, "method", "sobolev"));
  if (j.contains("tau")) {
    if (j.at("tau").is_array()) {
      c.tau.taus = j.at("tau").get<std::vector<double>>();
    } else {
      c.tau.taus = {j.at("tau").get<double>()};
    }
  }
  if (c.tau.taus.empty()) throw ConfigError("solver.tau is empty");
  const auto [lo, hi] = std::minmax_element(c.tau.taus.begin(), c.tau.taus.end());
  c.tau.tau_min = get_or(j, "tau_min", *lo);
  c.tau.tau_max = get_or(j, "tau_max", *hi);
  c.max_iterations = get_or(j, "max_iterations", c.max_iterations);
  c.stop.grad_norm_tol = get_or(j, "grad_norm_tol", c.stop.grad_norm_tol);
  c.stop.energy_stall_tol = get_or(j, "energy_stall_tol", c.stop.energy_stall_tol);
  c.stop.stall_window = get_or(j, "stall_window", c.stop.stall_window);
  c.record_every = get_or(j, "record_every", c.record_every);
  c.divergence_window = get_or(j, "divergence_window", c.divergence_window);
  if (j.contains("cg")) {
    const json& g = j.at("cg");
    c.cg.rel_tolerance = get_or(g, "rel_tolerance", c.cg.rel_tolerance);
    c.cg.max_iterations = get_or(g, "max_iterations", c.cg.max_iterations);
    c.cg.preconditioner =
        preconditioner_from_string(get_or<std::string>(g, "preconditioner", "jacobi"));
  }
  c.validate();
  return c;
}

json Scenario::to_json() const {
  json pot{{"kind", potential_kind_name(potential.kind)}};
  if (potential.kind == PotentialKind::Disordered) {
    pot["K"] = potential.disorder.cells;
    pot["seed"] = potential.disorder.seed;
    pot["high"] = potential.disorder.high;
    pot["low"] = potential.disorder.low_value();
  }
  if (potential.kind == PotentialKind::Custom) pot["values"] = potential.values;
  json b = json::array();
  for (const auto& [lo, hi] : bounds) b.push_back({lo, hi});
  return {{"name", name},
          {"tag", tag},
          {"grid", {{"d", dim}, {"bounds", b}, {"n_interior", n_interior}}},
          {"potential", pot},
          {"model",
           {{"variant", to_string(model.variant)},
            {"beta", model.beta},
            {"delta", model.delta},
            {"alpha", model.alpha}}},
          {"solver", solver_to_json(solver)},
          {"init", init_to_json(init)},
          {"reference",
           {{"enabled", reference.enabled},
            {"grad_norm_tol", reference.grad_norm_tol},
            {"max_iterations", reference.max_iterations}}},
          {"diagnostics",
           {{"lojasiewicz", diagnostics.lojasiewicz},
            {"tail_fraction", diagnostics.tail_fraction},
            {"certificate", diagnostics.certificate},
            {"hessian", diagnostics.hessian},
            {"eigen_gap", diagnostics.eigen_gap},
            {"norm_equivalence", diagnostics.norm_equivalence},
            {"norm_samples", diagnostics.norm_samples}}},
          {"saddle",
           {{"epsilons", saddle.epsilons},
            {"seed", saddle.seed},
            {"max_iterations", saddle.max_iterations}}},
          {"jobs", jobs},
          {"output_dir", output_dir}};
}

Scenario Scenario::from_json(const json& j) {
  try {
    Scenario s;
    s.name = j.at("name").get<std::string>();
    s.tag = get_or<std::string>(j, "tag", s.tag);
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      s.dim = get_or(g, "d", s.dim);
      if (g.contains("bounds")) {
        s.bounds.clear();
        for (const auto& p : g.at("bounds")) {
          s.bounds.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        }
      }
      if (g.contains("n_interior")) {
        const json& n = g.at("n_interior");
        s.n_interior = n.is_array() ? n.get<std::vector<int>>() : std::vector<int>{n.get<int>()};
      }
    }
    if (j.contains("potential")) {
      const json& p = j.at("potential");
      s.potential.kind = potential_kind_from(get_or<std::string>(p, "kind", "single-well"));
      s.potential.disorder.cells = get_or(p, "K", s.potential.disorder.cells);
      s.potential.disorder.seed = get_or<std::uint64_t>(p, "seed", s.potential.disorder.seed);
      s.potential.disorder.high = get_or(p, "high", s.potential.disorder.high);
      s.potential.disorder.low = get_or(p, "low", s.potential.disorder.low);
      if (p.contains("values")) s.potential.values = p.at("values").get<std::vector<double>>();
    }
    if (j.contains("model")) {
      const json& m = j.at("model");
      s.model.variant = variant_from_string(get_or<std::string>(m, "variant", "gpe"));
      s.model.beta = get_or(m, "beta", s.model.beta);
      s.model.delta = get_or(m, "delta", s.model.delta);
      s.model.alpha = get_or(m, "alpha", s.model.alpha);
      s.model.validate();
    }
    if (j.contains("solver")) s.solver = solver_from_json(j.at("solver"));
    if (j.contains("init")) s.init = init_from_json(j.at("init"));
    if (j.contains("reference")) {
      const json& r = j.at("reference");
      s.reference.enabled = get_or(r, "enabled", s.reference.enabled);
      s.reference.grad_norm_tol = get_or(r, "grad_norm_tol", s.reference.grad_norm_tol);
      s.reference.max_iterations = get_or(r, "max_iterations", s.reference.max_iterations);
    }
    if (j.contains("diagnostics")) {
      const json& d = j.at("diagnostics");
      auto& c = s.diagnostics;
      c.lojasiewicz = get_or(d, "lojasiewicz", c.lojasiewicz);
      c.tail_fraction = get_or(d, "tail_fraction", c.tail_fraction);
      c.certificate = get_or(d, "certificate", c.certificate);
      c.hessian = get_or(d, "hessian", c.hessian);
      c.eigen_gap = get_or(d, "eigen_gap", c.eigen_gap);
      c.norm_equivalence = get_or(d, "norm_equivalence", c.norm_equivalence);
      c.norm_samples = get_or(d, "norm_samples", c.norm_samples);
    }
    if (j.contains("saddle")) {
      const json& d = j.at("saddle");
      s.saddle.epsilons = get_or(d, "epsilons", s.saddle.epsilons);
      s.saddle.seed = get_or<std::uint64_t>(d, "seed", s.saddle.seed);
      s.saddle.max_iterations = get_or(d, "max_iterations", s.saddle.max_iterations);
    }
    s.jobs = get_or(j, "jobs", s.jobs);
    s.output_dir = get_or<std::string>(j, "output_dir", s.output_dir);
    if (s.jobs < 1) throw ConfigError("jobs must be >= 1");
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario json: ") + e.what());
  }
}

Scenario Scenario::load(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open scenario " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError("scenario " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void Scenario::save(const fs::path& path) const { write_json(path, to_json()); }

GridSpec Scenario::grid() const { return build_grid(dim, bounds, n_interior); }

Problem Scenario::problem() const {
  const GridSpec g = grid();
  Potential v;
  switch (potential.kind) {
    case PotentialKind::Zero: v = zero_potential(g); break;
    case PotentialKind::SingleWell: v = single_well_potential(g); break;
    case PotentialKind::Disordered: v = disordered_potential(g, potential.disorder); break;
    case PotentialKind::Custom:
      v = custom_potential(g, Eigen::Map<const Vector>(potential.values.data(),
                                                      potential.values.size()));
      break;
  }
  return Problem(g, std::move(v), model);
}

fs::path Scenario::run_directory() const {
  const char* env = std::getenv("SOBOLEV_OUT");
  const fs::path root = env && *env ? fs::path(env) : fs::path(output_dir);
  return root / name / tag;
}

// ---- presets --------------------------------------------------------------

std::vector<std::string> preset_names() {
  return {"gp-well", "gp-disorder", "saddle", "hoi", "linear-oracle", "baseline-compare"};
}

Scenario preset_scenario(const std::string& name, bool paper_scale) {
  Scenario s;
  s.name = name;
  const int n = paper_scale ? 255 : 127;
  s.n_interior = {n, n};
  s.tag = paper_scale ? "paper" : "default";
  s.solver.cg.rel_tolerance = 1e-12;
  s.solver.max_iterations = 1000;
  if (name == "gp-well") {
    s.model = ModelParams::gpe(1.0);
  } else if (name == "gp-disorder") {
    s.potential.kind = PotentialKind::Disordered;
    s.potential.disorder.cells = 100;
    s.potential.disorder.seed = 20210301;
    s.model = ModelParams::gpe(0.5);
    s.solver.tau = StepSchedule::constant(1.5);
    s.solver.max_iterations = 3000;
  } else if (name == "saddle") {
    s.model = ModelParams::gpe(100.0);
    s.init = InitStrategy::second_of_A0();
    s.diagnostics.hessian = true;
  } else if (name == "hoi") {
    s.model = ModelParams::hoi(100.0, 100.0);
    s.solver.max_iterations = 4000;
  } else if (name == "linear-oracle") {
    // Starting from the answer would make the oracle check vacuous.
    s.model = ModelParams::gpe(0.0);
    s.init = InitStrategy::positive_constant();
  } else if (name == "baseline-compare") {
    s.model = ModelParams::gpe(100.0);
    s.solver.method = Method::BaselineA0;
    s.solver.tau = StepSchedule::constant(0.3);
    s.solver.max_iterations = 3000;
    s.diagnostics.lojasiewicz = false;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return s;
}

// ---- run_scenario ---------------------------------------------------------

namespace {

SolverConfig reference_config(const Scenario& s) {
  SolverConfig c = s.solver;
  c.method = Method::Sobolev;
  c.tau = StepSchedule::constant(1.0);
  c.stop.grad_norm_tol = s.reference.grad_norm_tol;
  // Only an exactly stationary energy stops the reference early.
  c.stop.energy_stall_tol = 0.0;
  c.max_iterations = s.reference.max_iterations;
  return c;
}

json final_json(const IterationTrace& t) {
  if (t.records.empty()) return nullptr;
  const auto& r = t.records.back();
  return {{"iter", r.iter},
          {"energy", r.energy},
          {"grad_norm", r.grad_norm},
          {"lambda", r.lambda},
          {"residual", r.residual},
          {"l2_error", nan_safe(r.l2_error)}};
}

}  // namespace

ScenarioResult run_scenario(const Scenario& s, bool write) {
  ScenarioResult out;
  out.directory = s.run_directory();
  if (write) fs::create_directories(out.directory);
  json& diag = out.diagnostics;
  try {
    const Problem problem = s.problem();
    const GridSpec& grid = problem.grid;
    const State u0 = initialize(problem, s.init);

    RunOptions opts;
    if (s.reference.enabled) {
      out.reference = run_from(problem, reference_config(s), u0);
      const RunResult& ref = *out.reference;
      out.E_star = energy(problem, ref.state.values);
      opts.reference = &out.reference->state.values;
      diag["reference"] = {{"E_star", out.E_star},
                           {"iterations", ref.trace.iterations},
                           {"stop_reason", to_string(ref.trace.stop_reason)},
                           {"final", final_json(ref.trace)}};
    }
    out.run = run_from(problem, s.solver, u0, opts);
    const IterationTrace& trace = out.run.trace;
    diag["run"] = {{"method", to_string(s.solver.method)},
                   {"iterations", trace.iterations},
                   {"stop_reason", to_string(trace.stop_reason)},
                   {"monotonicity_violations", trace.monotonicity_violations},
                   {"min_entry_over_run", trace.min_entry_over_run},
                   {"final", final_json(trace)}};

    if (s.diagnostics.lojasiewicz && out.reference && s.solver.method == Method::Sobolev) {
      // The reference's own energy error is bounded by ~C_L^2 grad^2.
      const double g_ref = out.reference->trace.records.back().grad_norm;
      try {
        out.lojasiewicz = lojasiewicz_certify(trace, out.E_star, s.diagnostics.tail_fraction,
                                              100.0 * g_ref * g_ref);
        diag["lojasiewicz"] = out.lojasiewicz->to_json();
      } catch (const DiagnosticError& e) {
        diag["lojasiewicz"] = {{"error", e.what()}};
      }
    }
    if (s.diagnostics.certificate) {
      out.certificate = double_ground_state_check(problem, out.run.state.values);
      diag["certificate"] = out.certificate->to_json();
    }
    if (s.diagnostics.eigen_gap) {
      const EigenGap gap = eigen_gap_monitor(problem, out.run.state.values);
      diag["eigen_gap"] = {{"mu1", gap.mu1}, {"mu2", gap.mu2}, {"gap", gap.gap}};
    }
    if (s.diagnostics.hessian) {
      diag["hessian_smallest"] = projected_hessian_smallest(problem, out.run.state.values);
    }
    if (s.diagnostics.norm_equivalence) {
      diag["norm_equivalence"] =
          norm_equivalence_probe(problem, out.run.state.values, s.diagnostics.norm_samples, 11)
              .to_json();
    }
    out.ok = true;

    if (write) {
      trace.write_csv((out.directory / "trace.csv").string());
      write_grid_csv((out.directory / "state.csv").string(), grid, out.run.state.values);
      if (out.reference) {
        write_grid_csv((out.directory / "reference.csv").string(), grid,
                       out.reference->state.values);
      }
      write_json(out.directory / "diagnostics.json", diag);
      fs::remove(out.directory / "error.json");
    }
  } catch (const Error& e) {
    out.ok = false;
    out.error = e.what();
    if (write) {
      write_json(out.directory / "error.json",
                 {{"error", e.what()}, {"type", error_type(e)}, {"version", version_string()}});
      if (const auto* d = dynamic_cast<const DivergenceError*>(&e)) {
        d->trace().write_csv((out.directory / "trace.csv").string());
      }
    }
  }
  if (write) {
    json echo = s.to_json();
    echo["version"] = version_string();
    write_json(out.directory / "scenario.json", echo);
  }
  return out;
}

// ---- sweep ----------------------------------------------------------------

Scenario with_axis(const Scenario& base, const std::string& axis, double value) {
  Scenario s = base;
  if (axis == "beta") {
    s.model.beta = value;
  } else if (axis == "delta") {
    s.model.delta = value;
  } else if (axis == "alpha") {
    s.model.alpha = value;
  } else if (axis == "tau") {
    s.solver.tau = StepSchedule::constant(value);
  } else if (axis == "max_iterations") {
    s.solver.max_iterations = static_cast<int>(value);
  } else if (axis == "grad_norm_tol") {
    s.solver.stop.grad_norm_tol = value;
  } else if (axis == "energy_stall_tol") {
    s.solver.stop.energy_stall_tol = value;
  } else {
    throw ConfigError("unknown sweep axis '" + axis + "'");
  }
  s.tag = base.tag + "/sweep-" + axis + "/" + format_value(value);
  return s;
}

std::vector<SweepRow> sweep(const Scenario& base, const std::string& axis,
                            const std::vector<double>& values, int jobs, bool write) {
  with_axis(base, axis, 0.0);  // rejects unknown axes before any work
  std::vector<SweepRow> rows(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      SweepRow& row = rows[i];
      row.value = values[i];
      row.certificate = "n/a";
      try {
        Scenario cell = with_axis(base, axis, values[i]);
        cell.model.validate();
        cell.solver.validate();
        const ScenarioResult r = run_scenario(cell, write);
        if (!r.ok) {
          row.status = "error";
          row.error = r.error;
          continue;
        }
        const IterationTrace& t = r.run.trace;
        row.iterations = t.iterations;
        row.final_lambda = t.records.back().lambda;
        row.status = t.stop_reason == StopReason::MaxIterations ? "max_iterations" : "converged";
        if (r.lojasiewicz) row.rate_c = r.lojasiewicz->rate_c;
        if (r.certificate) row.certificate = r.certificate->passed() ? "pass" : "fail";
      } catch (const std::exception& e) {
        row.status = "error";
        row.error = e.what();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(values.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (write) {
    const fs::path dir = base.run_directory();
    fs::create_directories(dir);
    std::ofstream os(dir / ("sweep-" + axis + ".csv"));
    write_sweep_csv(os, rows);
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "value,status,iterations,final_lambda,rate_c,certificate,error\n";
  for (const auto& r : rows) {
    std::string err = r.error;
    for (char& c : err) {
      if (c == ',' || c == '\n' || c == '"') c = ' ';
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.12g,%s,%d,%.17g,%.17g,", r.value, r.status.c_str(),
                  r.iterations, r.final_lambda, r.rate_c);
    os << buf << r.certificate << ',' << err << '\n';
  }
}

// ---- saddle ---------------------------------------------------------------

json SaddleResult::to_json() const {
  json runs_j = json::array();
  for (const auto& r : runs) {
    runs_j.push_back({{"epsilon", r.epsilon},
                      {"iterations", r.iterations},
                      {"stop_reason", r.stop_reason},
                      {"argmin_dist_saddle", r.argmin},
                      {"min_dist_saddle", r.min_dist_saddle},
                      {"final_dist_ground", r.final_dist_ground},
                      {"final_alignment", r.final_alignment},
                      {"down_then_up", r.down_then_up}});
  }
  return {{"saddle",
           {{"iterations", saddle_iterations},
            {"grad_norm", saddle_grad_norm},
            {"residual", saddle_residual},
            {"hessian_smallest", hessian_smallest},
            {"certificate", saddle_certificate.to_json()}}},
          {"runs", runs_j}};
}

SaddleResult saddle_experiment(const Scenario& s, const std::vector<double>& epsilons,
                               std::uint64_t seed, bool write) {
  if (s.init.kind != InitStrategy::Kind::SecondOfA0) {
    throw ConfigError("saddle_experiment needs a second_of_A0 init");
  }
  const Problem problem = s.problem();
  const GridSpec& grid = problem.grid;
  SaddleResult out;

  const RunResult sr = run(problem, s.solver, s.init);
  out.saddle = sr.state;
  out.saddle_iterations = sr.trace.iterations;
  out.saddle_grad_norm = sr.trace.records.back().grad_norm;
  out.saddle_residual = sr.trace.records.back().residual;
  out.hessian_smallest = projected_hessian_smallest(problem, out.saddle.values);
  out.saddle_certificate = double_ground_state_check(problem, out.saddle.values);

  SolverConfig ground_cfg = s.solver;
  ground_cfg.method = Method::Sobolev;
  out.ground = run(problem, ground_cfg, InitStrategy::ground_of_A0()).state;

  // Near u* the energy repeats exactly to roundoff, so only the gradient stops a run.
  SolverConfig cfg = s.solver;
  cfg.max_iterations = s.saddle.max_iterations;
  cfg.stop.energy_stall_tol = 0.0;
  cfg.stop.stall_window = cfg.max_iterations + 1;

  fs::path dir = s.run_directory();
  if (write) fs::create_directories(dir);
  for (double eps : epsilons) {
    SaddleRun r;
    r.epsilon = eps;
    RunOptions opts;
    opts.observer = [&](int, const State& u) {
      r.dist_saddle.push_back(l2h_norm(u.values - out.saddle.values, grid));
      r.dist_ground.push_back(std::min(l2h_norm(u.values - out.ground.values, grid),
                                       l2h_norm(u.values + out.ground.values, grid)));
    };
    const RunResult rr =
        run(problem, cfg, InitStrategy::perturbed(s.init, eps, seed), opts);
    for (const auto& rec : rr.trace.records) r.energy.push_back(rec.energy);
    r.iterations = rr.trace.iterations;
    r.stop_reason = to_string(rr.trace.stop_reason);
    const auto& d = r.dist_saddle;
    r.argmin = static_cast<int>(std::min_element(d.begin(), d.end()) - d.begin());
    r.min_dist_saddle = d[r.argmin];
    r.down_then_up = r.argmin > 0 && r.argmin + 1 < static_cast<int>(d.size()) &&
                     d.front() > r.min_dist_saddle && d.back() > r.min_dist_saddle;
    r.final_dist_ground = r.dist_ground.back();
    r.final_alignment = std::abs(l2h_inner(rr.state.values, out.ground.values, grid));
    if (write) {
      std::ofstream os(dir / ("eps_" + format_value(eps) + ".csv"));
      os << "iter,dist_saddle,dist_ground,energy\n";
      char buf[160];
      for (std::size_t i = 0; i < d.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", i, d[i], r.dist_ground[i],
                      i < r.energy.size() ? r.energy[i] : kNaN);
        os << buf;
      }
    }
    out.runs.push_back(std::move(r));
  }
  if (write) {
    write_grid_csv((dir / "saddle_state.csv").string(), grid, out.saddle.values);
    write_grid_csv((dir / "ground_state.csv").string(), grid, out.ground.values);
    json j = out.to_json();
    j["version"] = version_string();
    write_json(dir / "saddle.json", j);
    json echo = s.to_json();
    echo["version"] = version_string();
    write_json(dir / "scenario.json", echo);
  }
  return out;
}

// ---- certify --------------------------------------------------------------

json CertifyResult::to_json() const {
  json j{{"certificate", certificate.to_json()}};
  if (lojasiewicz) {
    j["lojasiewicz"] = lojasiewicz->to_json();
  } else {
    j["lojasiewicz"] = {{"error", lojasiewicz_error}};
  }
  return j;
}

CertifyResult certify_run(const fs::path& dir, bool write) {
  const Scenario s = Scenario::load(dir / "scenario.json");
  const Problem problem = s.problem();
  const GridSpec& grid = problem.grid;
  const IterationTrace trace = IterationTrace::read_csv((dir / "trace.csv").string());
  const Vector state = read_grid_csv((dir / "state.csv").string(), grid);

  CertifyResult out;
  out.certificate = double_ground_state_check(problem, state);
  if (fs::exists(dir / "reference.csv")) {
    const Vector ref = read_grid_csv((dir / "reference.csv").string(), grid);
    const double E_star = energy(problem, ref);
    const SparseOperator A = assemble_A_u(problem, ref);
    const ManifoldGradient g = manifold_gradient(ref, A, grid, s.solver.cg);
    try {
      out.lojasiewicz = lojasiewicz_certify(trace, E_star, s.diagnostics.tail_fraction,
                                            100.0 * g.grad_norm_a_u * g.grad_norm_a_u);
    } catch (const DiagnosticError& e) {
      out.lojasiewicz_error = e.what();
    }
  } else {
    out.lojasiewicz_error = "no reference.csv in run directory";
  }
  if (write) write_json(dir / "certify.json", out.to_json());
  return out;
}

}  // namespace sobolev

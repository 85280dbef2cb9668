#include "sobolev/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sobolev {

void StepSchedule::validate() const {
  if (taus.empty()) throw ConfigError("step schedule is empty");
  if (!(tau_min > 0.0) || !(tau_min <= tau_max)) {
    throw ConfigError("step sizes need 0 < tau_min <= tau_max");
  }
  for (double t : taus) {
    if (!(t >= tau_min && t <= tau_max)) {
      throw ConfigError("step size outside [tau_min, tau_max]");
    }
  }
}

std::string to_string(Method m) { return m == Method::Sobolev ? "sobolev" : "baseline-a0"; }

Method method_from_string(const std::string& s) {
  if (s == "sobolev") return Method::Sobolev;
  if (s == "baseline-a0") return Method::BaselineA0;
  throw ConfigError("unknown method '" + s + "'");
}

void SolverConfig::validate() const {
  tau.validate();
  if (max_iterations < 0) throw ConfigError("max_iterations must be nonnegative");
  if (!(stop.grad_norm_tol >= 0.0)) throw ConfigError("grad_norm_tol must be nonnegative");
  if (!(stop.energy_stall_tol >= 0.0)) throw ConfigError("energy_stall_tol must be nonnegative");
  if (stop.stall_window < 1) throw ConfigError("stall_window must be positive");
  if (record_every < 1) throw ConfigError("record_every must be positive");
  if (divergence_window < 1) throw ConfigError("divergence_window must be positive");
  cg.validate();
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::GradientTolerance: return "grad_norm_tol";
    case StopReason::EnergyStall: return "energy_stall";
    case StopReason::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

std::string to_string(InitStrategy::Kind k) {
  switch (k) {
    case InitStrategy::Kind::GroundOfA0: return "ground_of_A0";
    case InitStrategy::Kind::SecondOfA0: return "second_of_A0";
    case InitStrategy::Kind::PositiveConstant: return "positive_constant";
    case InitStrategy::Kind::Custom: return "custom";
    case InitStrategy::Kind::Perturbed: return "perturbed";
  }
  return "unknown";
}

// ---- trace io -------------------------------------------------------------

const char* IterationTrace::csv_header() {
  return "iter,energy,grad_norm,lambda,residual,tau,min_u,max_u,l2_error,a0_diff";
}

void IterationTrace::write_csv(std::ostream& os) const {
  os << csv_header() << '\n';
  char buf[512];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.iter, r.energy, r.grad_norm, r.lambda, r.residual, r.tau, r.min_u, r.max_u,
                  r.l2_error, r.a0_diff);
    os << buf;
  }
}

void IterationTrace::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write trace to " + path);
  write_csv(os);
}

IterationTrace IterationTrace::read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read trace " + path);
  std::string line;
  std::getline(is, line);
  if (line.rfind("iter,energy", 0) != 0) throw ConfigError("unexpected trace header in " + path);
  IterationTrace trace;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::strtod(cell.c_str(), nullptr));
    if (v.size() != 10) throw ConfigError("malformed trace row in " + path);
    IterationRecord r;
    r.iter = static_cast<int>(v[0]);
    r.energy = v[1];
    r.grad_norm = v[2];
    r.lambda = v[3];
    r.residual = v[4];
    r.tau = v[5];
    r.min_u = v[6];
    r.max_u = v[7];
    r.l2_error = v[8];
    r.a0_diff = v[9];
    trace.min_entry_over_run = std::min(trace.min_entry_over_run, r.min_u);
    trace.records.push_back(r);
  }
  if (!trace.records.empty()) trace.iterations = trace.records.back().iter;
  for (std::size_t i = 1; i < trace.records.size(); ++i) {
    const double e0 = trace.records[i - 1].energy;
    if (trace.records[i].energy - e0 > 1e-12 * std::max(1.0, std::abs(e0))) {
      ++trace.monotonicity_violations;
    }
  }
  return trace;
}

// ---- initialization -------------------------------------------------------

namespace {

State second_of_A0(const Problem& problem, const EigenOptions& eig) {
  const GridSpec& grid = problem.grid;
  const SparseOperator A0 = assemble_A0(problem);
  const int k = static_cast<int>(std::min<Eigen::Index>(3, grid.size));
  if (k < 2) throw ConfigError("second_of_A0 needs at least two grid points");
  const auto pairs = smallest_eigenpairs(A0, k, grid, eig);

  // Orientation reference: the first coordinate times the ground mode.
  Vector probe(grid.size);
  for (Eigen::Index i = 0; i < grid.size; ++i) {
    probe[i] = grid.coordinate(i)[0] * std::abs(pairs[0].vector[i]);
  }

  const double mu2 = pairs[1].value;
  std::vector<const Vector*> cluster{&pairs[1].vector};
  for (int j = 2; j < k; ++j) {
    if (std::abs(pairs[j].value - mu2) <= 1e-8 * std::abs(mu2)) cluster.push_back(&pairs[j].vector);
  }
  Vector w = Vector::Zero(grid.size);
  if (cluster.size() > 1) {
    for (const Vector* c : cluster) w += l2h_inner(*c, probe, grid) * *c;
    if (!(l2h_norm(w, grid) > 1e-8)) w = pairs[1].vector;
  } else {
    w = pairs[1].vector;
  }
  if (l2h_inner(w, probe, grid) < 0.0) w = -w;
  return retract(w, grid);
}

}  // namespace

State initialize(const Problem& problem, const InitStrategy& strategy, const EigenOptions& eig) {
  const GridSpec& grid = problem.grid;
  switch (strategy.kind) {
    case InitStrategy::Kind::GroundOfA0: {
      const auto pairs = smallest_eigenpairs(assemble_A0(problem), 1, grid, eig);
      // The Perron vector is positive; abs removes roundoff-level sign noise.
      return retract(pairs[0].vector.cwiseAbs(), grid);
    }
    case InitStrategy::Kind::SecondOfA0:
      return second_of_A0(problem, eig);
    case InitStrategy::Kind::PositiveConstant:
      return retract(Vector::Ones(grid.size), grid);
    case InitStrategy::Kind::Custom:
      if (strategy.custom.size() != grid.size) {
        throw DimensionError("custom initial state length differs from grid N");
      }
      if (!strategy.custom.allFinite()) throw NumericError("custom initial state is not finite");
      return retract(strategy.custom, grid);
    case InitStrategy::Kind::Perturbed: {
      if (!strategy.base) throw ConfigError("perturbed init without a base strategy");
      if (!(strategy.epsilon >= 0.0)) throw ConfigError("perturbation epsilon must be >= 0");
      const State base = initialize(problem, *strategy.base, eig);
      Rng rng(strategy.seed);
      Vector eta(grid.size);
      for (Eigen::Index i = 0; i < grid.size; ++i) eta[i] = rng.symmetric();
      eta *= l2h_norm(base.values, grid) / l2h_norm(eta, grid);
      return retract(base.values + strategy.epsilon * eta, grid);
    }
  }
  throw ConfigError("unknown init strategy");
}

// ---- steps ----------------------------------------------------------------

State sobolev_pgd_step(const VectorRef& u, const ManifoldGradient& grad, double tau,
                       const GridSpec& grid) {
  if (!(tau > 0.0)) throw ConfigError("step size must be positive");
  const Vector trial = (1.0 - tau) * u + (tau / grad.inner_u_Gu) * grad.greens_of_u;
  return retract(trial, grid);
}

State sobolev_pgd_step(const VectorRef& u, const SparseOperator& A_u, double tau,
                       const GridSpec& grid, const CgConfig& cg) {
  return sobolev_pgd_step(u, manifold_gradient(u, A_u, grid, cg), tau, grid);
}

namespace {

A0Gradient a0_gradient_warm(const VectorRef& u, const SparseOperator& A_u,
                            const SparseOperator& A_0, const GridSpec& grid, const CgConfig& cg,
                            Vector* warm_y, Vector* warm_g) {
  const Vector rhs = A_u.apply(u);
  CgResult y = cg_solve(A_0, rhs, cg, warm_y);
  CgResult g = cg_solve(A_0, u, cg, warm_g);
  const double ug = l2h_inner(u, g.x, grid);
  if (!(ug > 0.0)) throw OperatorError("a0_gradient: (u, G_0 u) <= 0");
  A0Gradient out;
  out.direction = y.x - (l2h_inner(y.x, u, grid) / ug) * g.x;
  out.norm_a0 = a_u_norm(out.direction, A_0, grid);
  out.cg_iterations = y.iterations + g.iterations;
  if (warm_y) *warm_y = std::move(y.x);
  if (warm_g) *warm_g = std::move(g.x);
  return out;
}

}  // namespace

A0Gradient a0_gradient(const VectorRef& u, const SparseOperator& A_u, const SparseOperator& A_0,
                       const GridSpec& grid, const CgConfig& cg) {
  return a0_gradient_warm(u, A_u, A_0, grid, cg, nullptr, nullptr);
}

State baseline_a0_pgd_step(const VectorRef& u, const SparseOperator& A_u,
                           const SparseOperator& A_0, double tau, const GridSpec& grid,
                           const CgConfig& cg) {
  if (!(tau > 0.0)) throw ConfigError("step size must be positive");
  const A0Gradient g = a0_gradient(u, A_u, A_0, grid, cg);
  return retract(u - tau * g.direction, grid);
}

// ---- run loop -------------------------------------------------------------

RunResult run(const Problem& problem, const SolverConfig& config, const InitStrategy& init,
              const RunOptions& options) {
  config.validate();
  return run_from(problem, config, initialize(problem, init, options.eig), options);
}

RunResult run_from(const Problem& problem, const SolverConfig& config, State u0,
                   const RunOptions& options) {
  config.validate();
  const GridSpec& grid = problem.grid;
  if (u0.values.size() != grid.size) throw DimensionError("initial state length differs from N");
  if (options.reference && options.reference->size() != grid.size) {
    throw DimensionError("reference state length differs from N");
  }

  const SparseOperator A0 = assemble_A0(problem);
  RunResult result;
  IterationTrace& trace = result.trace;
  State u = retract(u0.values, grid);
  std::vector<double> energies;
  int rising = 0;
  Vector warm_gu, warm_y, warm_g;

  for (int n = 0;; ++n) {
    if (options.observer) options.observer(n, u);
    const SparseOperator A_u = assemble_A_u(problem, u.values);

    IterationRecord rec;
    rec.iter = n;
    rec.energy = energy(problem, u.values);
    rec.lambda = eigenvalue_estimate(u.values, A_u, grid);
    rec.residual = residual_norm(u.values, A_u, grid);
    rec.min_u = u.values.minCoeff();
    rec.max_u = u.values.maxCoeff();
    if (options.reference) rec.l2_error = l2h_norm(u.values - *options.reference, grid);
    trace.min_entry_over_run = std::min(trace.min_entry_over_run, rec.min_u);

    if (!std::isfinite(rec.energy)) {
      trace.records.push_back(rec);
      throw DivergenceError("run: energy became non-finite at iteration " + std::to_string(n),
                            trace);
    }
    if (!energies.empty()) {
      const double prev = energies.back();
      const double rise = rec.energy - prev;
      if (rise > 1e-12 * std::max(1.0, std::abs(prev))) {
        ++trace.monotonicity_violations;
        ++rising;
      } else {
        rising = 0;
      }
    }
    energies.push_back(rec.energy);
    if (rising >= config.divergence_window) {
      trace.records.push_back(rec);
      throw DivergenceError("run: energy increased over " +
                                std::to_string(config.divergence_window) +
                                " consecutive steps (iteration " + std::to_string(n) + ")",
                            trace);
    }

    ManifoldGradient mg;
    A0Gradient ag;
    if (config.method == Method::Sobolev) {
      mg = manifold_gradient(u.values, A_u, grid, config.cg,
                             warm_gu.size() == grid.size ? &warm_gu : nullptr);
      warm_gu = mg.greens_of_u;
      rec.grad_norm = mg.grad_norm_a_u;
    } else {
      ag = a0_gradient_warm(u.values, A_u, A0, grid, config.cg, &warm_y, &warm_g);
      rec.grad_norm = ag.norm_a0;
    }

    bool stop = false;
    if (rec.grad_norm <= config.stop.grad_norm_tol) {
      trace.stop_reason = StopReason::GradientTolerance;
      stop = true;
    } else if (n >= config.stop.stall_window &&
               std::abs(energies[n - config.stop.stall_window] - rec.energy) <=
                   config.stop.energy_stall_tol * std::abs(rec.energy)) {
      trace.stop_reason = StopReason::EnergyStall;
      stop = true;
    } else if (n >= config.max_iterations) {
      trace.stop_reason = StopReason::MaxIterations;
      stop = true;
    }
    if (stop) {
      trace.records.push_back(rec);
      trace.iterations = n;
      result.state = std::move(u);
      return result;
    }

    rec.tau = config.tau.at(n);
    State next = config.method == Method::Sobolev
                     ? sobolev_pgd_step(u.values, mg, rec.tau, grid)
                     : retract(u.values - rec.tau * ag.direction, grid);
    rec.a0_diff = a_u_norm(next.values - u.values, A0, grid);
    if (n % config.record_every == 0) trace.records.push_back(rec);
    u = std::move(next);
  }
}

}  // namespace sobolev

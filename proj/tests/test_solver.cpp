#include "sobolev/diagnostics.hpp"
#include "sobolev/errors.hpp"
#include "sobolev/solver.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <filesystem>

using namespace sobolev;
using namespace sobolev::test;

namespace {

const CgConfig kTight{1e-12, 0, Preconditioner::Jacobi};

SolverConfig config(double tau, int max_iterations, Method m = Method::Sobolev) {
  SolverConfig c;
  c.tau = StepSchedule::constant(tau);
  c.max_iterations = max_iterations;
  c.cg = kTight;
  c.method = m;
  return c;
}

// Dense oracle for the smallest eigenpair, normalized and positive.
std::pair<double, Vector> dense_ground(const SparseOperator& A, const GridSpec& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.to_dense());
  Vector v = normalized(es.eigenvectors().col(0), g);
  if (v.sum() < 0) v = -v;
  return {es.eigenvalues()[0], v};
}

}  // namespace

TEST(Config, Validation) {
  EXPECT_NO_THROW(config(1.0, 10).validate());
  EXPECT_THROW(StepSchedule::constant(0.0).validate(), ConfigError);
  EXPECT_THROW((StepSchedule{{}, 1.0, 1.0}).validate(), ConfigError);
  EXPECT_THROW((StepSchedule{{0.5, 2.0}, 0.5, 1.0}).validate(), ConfigError);
  SolverConfig c = config(1.0, 10);
  c.record_every = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = config(1.0, -1);
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(method_from_string(to_string(Method::BaselineA0)), Method::BaselineA0);
  EXPECT_THROW(method_from_string("newton"), ConfigError);
  const StepSchedule s{{0.5, 1.0}, 0.5, 1.0};
  EXPECT_EQ(s.at(0), 0.5);
  EXPECT_EQ(s.at(3), 1.0);
}

TEST(SobolevStep, FixedPointAtGroundStateOfLinearProblem) {
  const Problem p = well_problem(15, ModelParams::gpe(0.0));
  const SparseOperator A0 = assemble_A0(p);
  const auto [mu, v] = dense_ground(A0, p.grid);
  for (double tau : {0.5, 1.0, 1.5}) {
    const State next = sobolev_pgd_step(v, A0, tau, p.grid, kTight);
    EXPECT_LT(l2h_norm(next.values - v, p.grid), 1e-10) << tau;
  }
}

TEST(SobolevStep, UnitStepIsNormalizedGreensApplication) {
  const Problem p = well_problem(15, ModelParams::gpe(30.0));
  const Vector u = normalized(random_positive(p.size(), 1), p.grid);
  const SparseOperator A = assemble_A_u(p, u);
  const Vector Gu = Eigen::PartialPivLU<Eigen::MatrixXd>(A.to_dense()).solve(u);
  const Vector expected = normalized(Gu, p.grid);
  const State next = sobolev_pgd_step(u, A, 1.0, p.grid, kTight);
  EXPECT_TRUE(next.normalized);
  EXPECT_LT(l2h_norm(next.values - expected, p.grid), 1e-10);
  // General tau against the written-out combination.
  const double uGu = l2h_inner(u, Gu, p.grid);
  const Vector mix = normalized(0.6 * u + 0.4 * Gu / uGu, p.grid);
  EXPECT_LT(l2h_norm(sobolev_pgd_step(u, A, 0.4, p.grid, kTight).values - mix, p.grid), 1e-10);
  EXPECT_THROW(sobolev_pgd_step(u, A, 0.0, p.grid, kTight), ConfigError);
}

TEST(SobolevStep, PreservesPositivityForUnitStep) {
  const Problem p = well_problem(21, ModelParams::hoi(50.0, 5.0));
  Vector u = normalized(random_positive(p.size(), 2), p.grid);
  for (int n = 0; n < 5; ++n) {
    u = sobolev_pgd_step(u, assemble_A_u(p, u), 1.0, p.grid, kTight).values;
    EXPECT_GT(u.minCoeff(), 0.0);
  }
}

TEST(Run, LinearProblemConvergesToDenseEigenvector) {
  const Problem p = well_problem(19, ModelParams::gpe(0.0));
  const auto [mu, v] = dense_ground(assemble_A0(p), p.grid);
  SolverConfig c = config(1.0, 200);
  const RunResult r = run(p, c, InitStrategy::positive_constant());
  EXPECT_EQ(r.trace.stop_reason, StopReason::GradientTolerance);
  EXPECT_LT(l2h_norm(r.state.values - v, p.grid), 1e-8);
  EXPECT_NEAR(r.trace.records.back().lambda, mu, 1e-10 * mu);
}

TEST(Run, GeometricConvergenceAndMonotoneEnergy) {
  for (double beta : {1.0, 100.0}) {
    const Problem p = well_problem(31, ModelParams::gpe(beta));
    SolverConfig ref_cfg = config(1.0, 3000);
    ref_cfg.stop.grad_norm_tol = 1e-13;
    ref_cfg.stop.energy_stall_tol = 0.0;
    const RunResult ref = run(p, ref_cfg, InitStrategy::ground_of_A0());
    const Vector& ustar = ref.state.values;
    RunOptions opt;
    opt.reference = &ustar;
    const RunResult r = run(p, config(1.0, 500), InitStrategy::ground_of_A0(), opt);
    EXPECT_EQ(r.trace.monotonicity_violations, 0) << beta;
    std::vector<double> err;
    for (const auto& rec : r.trace.records) err.push_back(rec.l2_error);
    const auto [b, e] = error_band(err, 1e-2, 1e-9);
    const RateFit fit = rate_fit_range(err, b, e);
    EXPECT_GT(fit.r_squared, 0.99) << beta;
    EXPECT_LT(fit.rate_c, 1.0);
    EXPECT_LT(err.back(), 1e-7);
    for (std::size_t n = 1; n < r.trace.records.size(); ++n) {
      EXPECT_LE(r.trace.records[n].energy,
                r.trace.records[n - 1].energy + 1e-12 * r.trace.records[n - 1].energy);
    }
  }
}

TEST(Run, MassConservedAndTraceConsistent) {
  const Problem p = well_problem(21, ModelParams::gpe(10.0));
  int calls = 0;
  RunOptions opt;
  opt.observer = [&](int, const State& s) {
    ++calls;
    EXPECT_NEAR(l2h_norm(s.values, p.grid), 1.0, 1e-12);
  };
  const RunResult r = run(p, config(1.0, 30), InitStrategy::ground_of_A0(), opt);
  EXPECT_EQ(calls, r.trace.iterations + 1);
  EXPECT_EQ(static_cast<int>(r.trace.records.size()), r.trace.iterations + 1);
  for (std::size_t n = 0; n < r.trace.records.size(); ++n) {
    EXPECT_EQ(r.trace.records[n].iter, static_cast<int>(n));
  }
  EXPECT_TRUE(std::isnan(r.trace.records.back().a0_diff));
  EXPECT_GE(r.trace.min_entry_over_run, -1e-10);
}

TEST(Run, StopReasons) {
  const Problem p = well_problem(15, ModelParams::gpe(10.0));
  SolverConfig c = config(1.0, 3);
  c.stop.grad_norm_tol = 0.0;
  EXPECT_EQ(run(p, c, InitStrategy::ground_of_A0()).trace.stop_reason, StopReason::MaxIterations);
  EXPECT_EQ(run(p, c, InitStrategy::ground_of_A0()).trace.iterations, 3);
  c = config(1.0, 1000);
  c.stop.grad_norm_tol = 0.0;
  c.stop.energy_stall_tol = 1e-6;
  EXPECT_EQ(run(p, c, InitStrategy::ground_of_A0()).trace.stop_reason, StopReason::EnergyStall);
  c = config(1.0, 0);
  const RunResult zero = run(p, c, InitStrategy::ground_of_A0());
  EXPECT_EQ(zero.trace.iterations, 0);
  EXPECT_EQ(zero.trace.records.size(), 1u);
}

TEST(Run, RecordEvery) {
  const Problem p = well_problem(15, ModelParams::gpe(10.0));
  SolverConfig c = config(1.0, 10);
  c.stop.grad_norm_tol = 0.0;
  c.record_every = 4;
  const RunResult r = run(p, c, InitStrategy::ground_of_A0());
  std::vector<int> iters;
  for (const auto& rec : r.trace.records) iters.push_back(rec.iter);
  EXPECT_EQ(iters, (std::vector<int>{0, 4, 8, 10}));
}

TEST(Baseline, CoincidesWithSobolevForLinearProblem) {
  const Problem p = well_problem(15, ModelParams::gpe(0.0));
  const Vector u = normalized(random_positive(p.size(), 4), p.grid);
  const SparseOperator A0 = assemble_A0(p);
  for (double tau : {0.5, 1.0}) {
    const State s = sobolev_pgd_step(u, A0, tau, p.grid, kTight);
    const State b = baseline_a0_pgd_step(u, A0, A0, tau, p.grid, kTight);
    EXPECT_LT(l2h_norm(s.values - b.values, p.grid), 1e-10) << tau;
  }
  const ManifoldGradient mg = manifold_gradient(u, A0, p.grid, kTight);
  const A0Gradient g0 = a0_gradient(u, A0, A0, p.grid, kTight);
  EXPECT_NEAR(g0.norm_a0, mg.grad_norm_a_u, 1e-9 * mg.grad_norm_a_u);
}

TEST(Baseline, DirectionMatchesDenseFormula) {
  const Problem p = well_problem(11, ModelParams::gpe(20.0));
  const Vector u = normalized(random_positive(p.size(), 5), p.grid);
  const SparseOperator A = assemble_A_u(p, u), A0 = assemble_A0(p);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A0.to_dense());
  const Vector y = lu.solve(A.apply(u)), g = lu.solve(u);
  const Vector dir = y - (l2h_inner(y, u, p.grid) / l2h_inner(u, g, p.grid)) * g;
  const A0Gradient r = a0_gradient(u, A, A0, p.grid, kTight);
  EXPECT_LT((r.direction - dir).norm(), 1e-9 * dir.norm());
  EXPECT_NEAR(l2h_inner(r.direction, u, p.grid), 0.0, 1e-10);
  EXPECT_NEAR(r.norm_a0, a_u_norm(dir, A0, p.grid), 1e-9 * r.norm_a0);
  const State next = baseline_a0_pgd_step(u, A, A0, 0.3, p.grid, kTight);
  EXPECT_LT(l2h_norm(next.values - normalized(u - 0.3 * dir, p.grid), p.grid), 1e-10);
}

TEST(Baseline, FixedPointAtNonlinearGroundState) {
  const Problem p = well_problem(21, ModelParams::gpe(50.0));
  SolverConfig c = config(1.0, 2000);
  c.stop.grad_norm_tol = 1e-12;
  c.stop.energy_stall_tol = 0.0;
  const RunResult r = run(p, c, InitStrategy::ground_of_A0());
  const Vector& v = r.state.values;
  const State next = baseline_a0_pgd_step(v, assemble_A_u(p, v), assemble_A0(p), 0.3, p.grid, kTight);
  EXPECT_LT(l2h_norm(next.values - v, p.grid), 1e-9);
}

TEST(Baseline, NeedsMoreIterationsAtStrongInteraction) {
  const Problem p = well_problem(31, ModelParams::gpe(100.0));
  SolverConfig c = config(1.0, 3000);
  c.stop.grad_norm_tol = 1e-13;
  c.stop.energy_stall_tol = 0.0;
  const RunResult ref = run(p, c, InitStrategy::ground_of_A0());
  RunOptions opt;
  opt.reference = &ref.state.values;
  auto to_1e8 = [](const IterationTrace& t) {
    for (const auto& r : t.records) {
      if (r.l2_error < 1e-8) return r.iter;
    }
    return -1;
  };
  c.stop.grad_norm_tol = 1e-11;
  const int sob = to_1e8(run(p, c, InitStrategy::ground_of_A0(), opt).trace);
  SolverConfig b = c;
  b.method = Method::BaselineA0;
  b.tau = StepSchedule::constant(0.3);
  const int base = to_1e8(run(p, b, InitStrategy::ground_of_A0(), opt).trace);
  ASSERT_GT(sob, 0);
  ASSERT_GT(base, 0);
  EXPECT_LT(sob, base);
}

TEST(Baseline, UnitStepDivergesAtStrongInteraction) {
  const Problem p = well_problem(31, ModelParams::gpe(100.0));
  SolverConfig c = config(1.0, 500, Method::BaselineA0);
  try {
    run(p, c, InitStrategy::ground_of_A0());
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_GE(e.trace().monotonicity_violations, c.divergence_window);
    EXPECT_FALSE(e.trace().records.empty());
  }
}

TEST(Init, GroundOfA0IsPositiveEigenvector) {
  const Problem p = well_problem(15, ModelParams::gpe(5.0));
  const auto [mu, v] = dense_ground(assemble_A0(p), p.grid);
  const State s = initialize(p, InitStrategy::ground_of_A0());
  EXPECT_TRUE(s.normalized);
  EXPECT_GT(s.values.minCoeff(), 0.0);
  EXPECT_LT(l2h_norm(s.values - v, p.grid), 1e-8);
}

TEST(Init, SecondOfA0LiesInSecondEigenspace) {
  const Problem p = well_problem(15, ModelParams::gpe(5.0));
  const SparseOperator A0 = assemble_A0(p);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A0.to_dense());
  const State s = initialize(p, InitStrategy::second_of_A0());
  EXPECT_NEAR(l2h_norm(s.values, p.grid), 1.0, 1e-12);
  // Degenerate pair on the square: A0 s = mu2 s.
  const double mu2 = es.eigenvalues()[1];
  EXPECT_NEAR(es.eigenvalues()[2], mu2, 1e-8 * mu2);
  EXPECT_LT(l2h_norm(A0.apply(s.values) - mu2 * s.values, p.grid), 1e-7 * mu2);
  // Odd in x, even in y: the x-mode representative.
  const GridSpec& g = p.grid;
  const int n = g.n_interior[0];
  EXPECT_NEAR(s.values[g.index(2, 5)], -s.values[g.index(n - 3, 5)], 1e-8);
  EXPECT_NEAR(s.values[g.index(2, 5)], s.values[g.index(2, n - 6)], 1e-8);
}

TEST(Init, PositiveConstantCustomAndPerturbed) {
  const Problem p = well_problem(9, ModelParams::gpe(1.0));
  const State c = initialize(p, InitStrategy::positive_constant());
  EXPECT_NEAR(c.values.maxCoeff(), c.values.minCoeff(), 1e-15);
  EXPECT_NEAR(l2h_norm(c.values, p.grid), 1.0, 1e-14);
  const Vector v = random_positive(p.size(), 3);
  EXPECT_LT((initialize(p, InitStrategy::from_vector(v)).values - normalized(v, p.grid)).norm(), 1e-14);
  EXPECT_THROW(initialize(p, InitStrategy::from_vector(Vector::Ones(3))), DimensionError);
  EXPECT_THROW(initialize(p, InitStrategy::from_vector(Vector::Zero(p.size()))), DomainError);

  const State base = initialize(p, InitStrategy::ground_of_A0());
  const State a = initialize(p, InitStrategy::perturbed(InitStrategy::ground_of_A0(), 1e-3, 7));
  const State b = initialize(p, InitStrategy::perturbed(InitStrategy::ground_of_A0(), 1e-3, 7));
  EXPECT_EQ((a.values - b.values).norm(), 0.0);
  const double d = l2h_norm(a.values - base.values, p.grid);
  EXPECT_GT(d, 1e-5);
  EXPECT_LT(d, 2e-3);
  EXPECT_LT((initialize(p, InitStrategy::perturbed(InitStrategy::ground_of_A0(), 0.0, 7)).values -
             base.values).norm(), 1e-14);
}

TEST(Trace, CsvRoundTrip) {
  const Problem p = well_problem(15, ModelParams::gpe(10.0));
  const RunResult r = run(p, config(1.0, 12), InitStrategy::ground_of_A0());
  const auto path = std::filesystem::temp_directory_path() / "sobolev_trace_roundtrip.csv";
  r.trace.write_csv(path.string());
  const IterationTrace back = IterationTrace::read_csv(path.string());
  ASSERT_EQ(back.records.size(), r.trace.records.size());
  for (std::size_t i = 0; i < back.records.size(); ++i) {
    EXPECT_EQ(back.records[i].energy, r.trace.records[i].energy);
    EXPECT_EQ(back.records[i].grad_norm, r.trace.records[i].grad_norm);
    EXPECT_EQ(back.records[i].iter, r.trace.records[i].iter);
  }
  EXPECT_TRUE(std::isnan(back.records.back().a0_diff));
  EXPECT_EQ(back.monotonicity_violations, r.trace.monotonicity_violations);
  std::filesystem::remove(path);
  EXPECT_THROW(IterationTrace::read_csv(path.string()), ConfigError);
}

TEST(Run, Reproducible) {
  const Problem p = well_problem(21, ModelParams::hoi(10.0, 1.0));
  const RunResult a = run(p, config(1.0, 20), InitStrategy::ground_of_A0());
  const RunResult b = run(p, config(1.0, 20), InitStrategy::ground_of_A0());
  EXPECT_EQ((a.state.values - b.state.values).norm(), 0.0);
  EXPECT_EQ(a.trace.records.back().energy, b.trace.records.back().energy);
}

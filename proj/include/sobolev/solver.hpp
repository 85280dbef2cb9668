#pragma once

#include "sobolev/errors.hpp"
#include "sobolev/linsolve.hpp"
#include "sobolev/manifold.hpp"
#include "sobolev/operators.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sobolev {

/// Fixed step-size schedule, cycled when shorter than the run.
struct StepSchedule {
  std::vector<double> taus{1.0};
  double tau_min = 1.0;
  double tau_max = 1.0;

  static StepSchedule constant(double tau) { return {{tau}, tau, tau}; }
  double at(int n) const { return taus[static_cast<std::size_t>(n) % taus.size()]; }
  void validate() const;
};

struct StopRule {
  double grad_norm_tol = 1e-10;
  /// Stop when |E_{n-w} - E_n| <= tol |E_n| over the window w.
  double energy_stall_tol = 1e-14;
  int stall_window = 10;
};

enum class Method {
  Sobolev,     // adaptive a_u metric
  BaselineA0,  // fixed a_0 metric
};

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct SolverConfig {
  StepSchedule tau;
  int max_iterations = 500;
  StopRule stop;
  CgConfig cg;
  int record_every = 1;
  Method method = Method::Sobolev;
  /// Consecutive energy increases (beyond 1e-12 relative) that abort a run.
  int divergence_window = 5;

  void validate() const;
};

enum class StopReason { GradientTolerance, EnergyStall, MaxIterations };
std::string to_string(StopReason r);

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Values at iterate u_n; a0_diff refers to the step u_n -> u_{n+1} and is NaN
/// on the final row. grad_norm is the a_u norm of the a_u-manifold gradient
/// for Sobolev runs and the a_0 norm of the a_0 gradient for baseline runs.
struct IterationRecord {
  int iter = 0;
  double energy = kNaN;
  double grad_norm = kNaN;
  double lambda = kNaN;
  double residual = kNaN;
  double tau = kNaN;
  double min_u = kNaN;
  double max_u = kNaN;
  double l2_error = kNaN;
  double a0_diff = kNaN;
};

struct IterationTrace {
  std::vector<IterationRecord> records;
  StopReason stop_reason = StopReason::MaxIterations;
  int iterations = 0;  // steps taken
  /// Energy increases larger than 1e-12 max(1, |E|) between consecutive iterates.
  int monotonicity_violations = 0;
  double min_entry_over_run = std::numeric_limits<double>::infinity();

  static const char* csv_header();
  void write_csv(std::ostream& os) const;
  void write_csv(const std::string& path) const;
  static IterationTrace read_csv(const std::string& path);
};

/// The energy rose for `divergence_window` consecutive steps.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, IterationTrace trace)
      : Error(what), trace_(std::move(trace)) {}
  const IterationTrace& trace() const { return trace_; }

 private:
  IterationTrace trace_;
};

struct InitStrategy {
  enum class Kind { GroundOfA0, SecondOfA0, PositiveConstant, Custom, Perturbed };

  Kind kind = Kind::GroundOfA0;
  Vector custom;
  std::shared_ptr<const InitStrategy> base;  // Perturbed only
  double epsilon = 0.0;
  std::uint64_t seed = 0;

  static InitStrategy ground_of_A0() { return {}; }
  static InitStrategy second_of_A0() {
    InitStrategy s;
    s.kind = Kind::SecondOfA0;
    return s;
  }
  static InitStrategy positive_constant() {
    InitStrategy s;
    s.kind = Kind::PositiveConstant;
    return s;
  }
  static InitStrategy from_vector(Vector v) {
    InitStrategy s;
    s.kind = Kind::Custom;
    s.custom = std::move(v);
    return s;
  }
  static InitStrategy perturbed(InitStrategy base, double epsilon, std::uint64_t seed) {
    InitStrategy s;
    s.kind = Kind::Perturbed;
    s.base = std::make_shared<const InitStrategy>(std::move(base));
    s.epsilon = epsilon;
    s.seed = seed;
    return s;
  }
};

std::string to_string(InitStrategy::Kind k);

/// Builds u_0.
///   ground_of_A0: Perron eigenvector of A_0, entrywise positive.
///   second_of_A0: second eigenvector of A_0. When mu_2 is degenerate the
///     representative is the projection of x_1 * w_1 onto the eigenspace.
///   perturbed: R(base + eps * eta), eta uniform in [-1,1] entrywise, rescaled
///     so ||eta|| = ||base||.
State initialize(const Problem& problem, const InitStrategy& strategy,
                 const EigenOptions& eig = {});

/// One Sobolev PGD step from a precomputed gradient:
///   R((1 - tau) u + tau G_u u / (u, G_u u)).
State sobolev_pgd_step(const VectorRef& u, const ManifoldGradient& grad, double tau,
                       const GridSpec& grid);
State sobolev_pgd_step(const VectorRef& u, const SparseOperator& A_u, double tau,
                       const GridSpec& grid, const CgConfig& cg);

/// Projected gradient in the fixed a_0 metric: y = G_0(A_u u), g = G_0 u,
/// direction = y - (y, u)/(u, g) g.
struct A0Gradient {
  Vector direction;
  double norm_a0 = 0.0;
  int cg_iterations = 0;
};
A0Gradient a0_gradient(const VectorRef& u, const SparseOperator& A_u, const SparseOperator& A_0,
                       const GridSpec& grid, const CgConfig& cg);

State baseline_a0_pgd_step(const VectorRef& u, const SparseOperator& A_u,
                           const SparseOperator& A_0, double tau, const GridSpec& grid,
                           const CgConfig& cg);

struct RunResult {
  State state;
  IterationTrace trace;
};

struct RunOptions {
  const Vector* reference = nullptr;
  EigenOptions eig{};
  /// Called with every iterate u_n, including u_0 and the returned state.
  std::function<void(int, const State&)> observer;
};

/// Runs PGD from `init` until the stop rule fires or max_iterations steps are
/// taken. A_u is reassembled at every iterate.
RunResult run(const Problem& problem, const SolverConfig& config, const InitStrategy& init,
              const RunOptions& options = {});
RunResult run_from(const Problem& problem, const SolverConfig& config, State u0,
                   const RunOptions& options = {});

}  // namespace sobolev

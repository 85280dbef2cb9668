#pragma once

#include "sobolev/errors.hpp"
#include "sobolev/linsolve.hpp"
#include "sobolev/manifold.hpp"
#include "sobolev/operators.hpp"
#include "sobolev/solver.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sobolev {

struct RateFit {
  double rate_c = kNaN;     // exp(slope) of log(error) against n
  double r_squared = kNaN;
  int begin = 0;            // fitted index range [begin, end)
  int end = 0;
};

/// Least-squares fit of log(errors[n]) over the last `window` entries.
RateFit rate_fit(const std::vector<double>& errors, int window);
/// Same fit over the index range [begin, end).
RateFit rate_fit_range(const std::vector<double>& errors, int begin, int end);

/// Index range from the first entry below `upper` to the last entry above
/// `lower`, i.e. the clean geometric part of an error curve.
std::pair<int, int> error_band(const std::vector<double>& errors, double upper, double lower);

struct LojasiewiczReport {
  double theta = 0.5;
  double C_L = kNaN;  // max |E_n - E*|^(1/2) / grad_n
  double C_D = kNaN;  // min (E_n - E_{n+1}) / (grad_n a0diff_n)
  double C_S = kNaN;  // min a0diff_n / grad_n
  int tail_start = 0;
  int tail_end = 0;   // exclusive
  double noise_floor = 0.0;
  double rate_c = kNaN;
  double rate_r_squared = kNaN;
  std::string rate_source;  // "l2_error" or "energy"
  /// 1 - C_D C_S / (2 C_L^2): the contraction factor implied by the triplet.
  double contraction_bound = kNaN;

  bool constants_finite_positive() const;
  bool passed() const;
  nlohmann::json to_json() const;
  std::string summary() const;
};

/// Empirical (L)/(D)/(S) constants over the tail of a Sobolev trace.
/// Indices n with E_n - E* <= max(100 eps |E*|, e_star_error) are noise; the
/// valid region is the leading run of indices above it, and the tail is its
/// last `tail_fraction` (at least three steps).
LojasiewiczReport lojasiewicz_certify(const IterationTrace& trace, double E_star,
                                      double tail_fraction = 0.5, double e_star_error = 0.0);

struct GroundStateCertificate {
  double lambda1 = kNaN;
  double lambda2 = kNaN;
  double gap = kNaN;
  double alignment = kNaN;  // |(v, w_1)_{L^2_h}| for normalized v
  double residual = kNaN;   // ||A_v v - lambda(v) v||_{L^2_h}
  double tolerance = 1e-6;

  bool passed() const { return alignment >= 1.0 - tolerance && gap > 0.0; }
  nlohmann::json to_json() const;
  std::string summary() const;
};

GroundStateCertificate double_ground_state_check(const Problem& problem, const VectorRef& v,
                                                 const EigenOptions& eig = {},
                                                 double tolerance = 1e-6);

struct LinearLojasiewiczSides {
  double lhs = 0.0;  // (u,u)_A - (w1,w1)_A
  double rhs = 0.0;  // C_L ((u,u)_A - 1 / (u, G u))
  double scale = 0.0;  // (u,u)_A, for relative comparisons
};

struct LinearLojasiewiczReport {
  bool skipped = false;
  std::string notice;
  double s = 0.0;
  double mu1 = kNaN;
  double mu2 = kNaN;
  double C_L = kNaN;
  int trials = 0;
  int violations = 0;
  double max_violation = 0.0;  // max (lhs - rhs) / (u,u)_A, clipped below at 0

  bool passed() const { return !skipped && violations == 0; }
  nlohmann::json to_json() const;
};

/// Violation threshold on (lhs - rhs) / (u,u)_A.
constexpr double kLinearLojasiewiczTolerance = 1e-10;

/// Samples u = cos(phi) w1 + sin(phi) z with z a random unit vector orthogonal
/// to w1 and ||u - w1|| <= s, and checks the linear inequality with
/// C_L = 1 + mu2 / ((mu2 - mu1)(1 - s^2)). G is applied through a sparse
/// Cholesky factorization of A.
LinearLojasiewiczReport linear_lojasiewicz_test(const SparseOperator& A, double s, int trials,
                                                std::uint64_t seed, double cell_volume = 1.0,
                                                const EigenOptions& eig = {});

/// Both sides of the inequality for one state u (normalized internally).
LinearLojasiewiczSides linear_lojasiewicz_sides(const SparseOperator& A, const VectorRef& w1,
                                                double mu1, double C_L, const VectorRef& u,
                                                double cell_volume = 1.0);

struct NormEquivalence {
  double c_low_a0 = kNaN;   // min ||z||_{a_0} / ||z||_{a_u}
  double c_high_a0 = kNaN;  // max
  double c_low_h1 = kNaN;   // min ||z||_{H^1_h} / ||z||_{a_u}
  double c_high_h1 = kNaN;
  nlohmann::json to_json() const;
};

/// Ratios over `samples` random z; H^1_h is z'(-L)z h^d + ||z||^2_{L^2_h}.
NormEquivalence norm_equivalence_probe(const Problem& problem, const VectorRef& u, int samples,
                                       std::uint64_t seed);

struct RetractionOrder {
  double slope = kNaN;
  bool degenerate = false;
  std::vector<double> scales;      // scales kept after underflow truncation
  std::vector<double> deviations;  // ||R(u + t xi) - (u + t xi)||_{a_u}
};

/// xi is rescaled to unit a_u norm, so t is the a_u length of the step.
RetractionOrder retraction_order_probe(const VectorRef& u, const SparseOperator& A_u,
                                       const VectorRef& xi, const std::vector<double>& scales,
                                       const GridSpec& grid);

/// Smallest eigenvalue of P (J - lambda(u) I) P on the L^2_h tangent space at
/// u, where J is half the Hessian of E_h divided by h^d. Negative values
/// certify a strict saddle.
double projected_hessian_smallest(const Problem& problem, const VectorRef& u,
                                  const EigenOptions& eig = {});

struct EigenGap {
  double mu1 = kNaN;
  double mu2 = kNaN;
  double gap = kNaN;
};

EigenGap eigen_gap_monitor(const Problem& problem, const VectorRef& u,
                           const EigenOptions& eig = {});

}  // namespace sobolev

#pragma once

#include "sobolev/grid.hpp"
#include "sobolev/sparse_operator.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sobolev {

enum class Preconditioner { None, Jacobi };

std::string to_string(Preconditioner p);
Preconditioner preconditioner_from_string(const std::string& s);

struct CgConfig {
  double rel_tolerance = 1e-10;  // on ||A y - b|| / ||b||
  /// 0 selects the default max(500, 10 sqrt(N)).
  int max_iterations = 0;
  Preconditioner preconditioner = Preconditioner::Jacobi;

  int iteration_limit(Eigen::Index n) const;
  void validate() const;
};

struct CgResult {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;  // true residual, recomputed after the loop
};

/// Preconditioned conjugate gradients for symmetric positive definite A.
/// Throws OperatorError on nonpositive curvature and SolverError when the
/// tolerance is not met within the iteration limit.
CgResult cg_solve(const SparseOperator& A, const VectorRef& b, const CgConfig& config,
                  const Vector* initial_guess = nullptr);

/// y = G_u u, i.e. the solution of A_u y = u. The h^d weights of a_u and
/// L^2_h cancel, so no scaling is applied.
CgResult greens_apply(const VectorRef& u, const SparseOperator& A_u, const CgConfig& config,
                      const Vector* initial_guess = nullptr);

struct EigenPair {
  double value = 0.0;
  Vector vector;          // L^2_h-normalized
  double residual = 0.0;  // ||A v - value v||_{L^2_h}
};

struct EigenOptions {
  /// Stop once every requested pair has residual <= tol * max(|value|, 1).
  double residual_tolerance = 1e-9;
  int max_iterations = 400;
  /// Dense eigendecomposition is used when N is at most this and allow_dense.
  Eigen::Index dense_threshold = 2000;
  bool allow_dense = true;
  /// Extra Ritz vectors carried beyond the k requested.
  int guard_vectors = 2;
  CgConfig cg{1e-12, 0, Preconditioner::Jacobi};
  std::uint64_t seed = 0x5eed;
  /// Optional warm start; copied into the leading block columns.
  std::vector<Vector> initial_guesses;
};

/// k smallest eigenpairs of a symmetric positive definite A in ascending
/// order with L^2_h-orthonormal vectors (weight cell_volume). Each vector is
/// returned with a nonnegative entry sum. Large problems use block inverse
/// iteration with CG inner solves and Rayleigh-Ritz deflation.
std::vector<EigenPair> smallest_eigenpairs(const SparseOperator& A, int k,
                                           const GridSpec& grid,
                                           const EigenOptions& options = {});
std::vector<EigenPair> smallest_eigenpairs(const SparseOperator& A, int k,
                                           double cell_volume,
                                           const EigenOptions& options = {});

/// Smallest eigenpairs of P A P restricted to the orthogonal complement of
/// `constraint` (P the orthogonal projector). A must be positive definite.
std::vector<EigenPair> smallest_constrained_eigenpairs(const SparseOperator& A,
                                                       const VectorRef& constraint, int k,
                                                       double cell_volume,
                                                       const EigenOptions& options = {});

}  // namespace sobolev

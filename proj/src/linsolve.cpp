#include "sobolev/linsolve.hpp"

#include "sobolev/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sobolev {

std::string to_string(Preconditioner p) {
  return p == Preconditioner::Jacobi ? "jacobi" : "none";
}

Preconditioner preconditioner_from_string(const std::string& s) {
  if (s == "jacobi") return Preconditioner::Jacobi;
  if (s == "none") return Preconditioner::None;
  throw ConfigError("unknown preconditioner '" + s + "'");
}

int CgConfig::iteration_limit(Eigen::Index n) const {
  if (max_iterations > 0) return max_iterations;
  return std::max(500, static_cast<int>(10.0 * std::sqrt(static_cast<double>(n))));
}

void CgConfig::validate() const {
  if (!(rel_tolerance > 0.0)) throw ConfigError("CG tolerance must be positive");
  if (max_iterations < 0) throw ConfigError("CG max_iterations must be >= 1 (0 = default)");
}

CgResult cg_solve(const SparseOperator& A, const VectorRef& b, const CgConfig& config,
                  const Vector* initial_guess) {
  config.validate();
  const Eigen::Index n = A.dimension();
  if (b.size() != n) throw DimensionError("cg_solve: rhs length differs from operator");
  if (!b.allFinite()) throw NumericError("cg_solve: non-finite right-hand side");

  CgResult result;
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    result.x = Vector::Zero(n);
    return result;
  }

  Vector inv_diag = Vector::Ones(n);
  if (config.preconditioner == Preconditioner::Jacobi) {
    const Vector d = A.diagonal_entries();
    if ((d.array() <= 0.0).any()) {
      throw OperatorError("cg_solve: nonpositive diagonal, operator is not SPD");
    }
    inv_diag = d.cwiseInverse();
  }

  Vector& x = result.x;
  x = initial_guess && initial_guess->size() == n ? *initial_guess : Vector::Zero(n);
  const int limit = config.iteration_limit(n);
  const double target = config.rel_tolerance * b_norm;

  Vector r(n), z(n), p(n), Ap(n);
  int total = 0;
  // Restarts refresh the recurrence residual when it drifts from the true one.
  for (int restart = 0; restart < 4; ++restart) {
    A.apply(x, Ap);
    r = b - Ap;
    double r_norm = r.norm();
    if (r_norm <= target) {
      result.iterations = total;
      result.relative_residual = r_norm / b_norm;
      return result;
    }
    z = inv_diag.cwiseProduct(r);
    p = z;
    double rz = r.dot(z);
    while (total < limit) {
      A.apply(p, Ap);
      const double curvature = p.dot(Ap);
      if (!(curvature > 0.0)) {
        throw OperatorError("cg_solve: nonpositive curvature p'Ap <= 0, operator is indefinite");
      }
      const double step = rz / curvature;
      x.noalias() += step * p;
      r.noalias() -= step * Ap;
      ++total;
      r_norm = r.norm();
      if (r_norm <= target) break;
      z = inv_diag.cwiseProduct(r);
      const double rz_next = r.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    A.apply(x, Ap);
    const double true_norm = (b - Ap).norm();
    result.iterations = total;
    result.relative_residual = true_norm / b_norm;
    if (true_norm <= target) return result;
    if (total >= limit) break;
  }
  throw SolverError("cg_solve: no convergence within " + std::to_string(limit) +
                        " iterations (relative residual " +
                        std::to_string(result.relative_residual) + ")",
                    result.relative_residual, result.iterations);
}

CgResult greens_apply(const VectorRef& u, const SparseOperator& A_u, const CgConfig& config,
                      const Vector* initial_guess) {
  return cg_solve(A_u, u, config, initial_guess);
}

namespace {

// Orthonormalizes the columns of X (Euclidean) against themselves and against
// an optional unit constraint vector; dependent columns are refilled from rng.
void orthonormalize(Eigen::MatrixXd& X, const Vector* constraint, Rng& rng) {
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    for (int attempt = 0; attempt < 4; ++attempt) {
      auto col = X.col(j);
      const double before = col.norm();
      for (int pass = 0; pass < 2; ++pass) {
        if (constraint) col -= constraint->dot(col) * *constraint;
        for (Eigen::Index i = 0; i < j; ++i) col -= X.col(i).dot(col) * X.col(i);
      }
      const double after = col.norm();
      if (after > 1e-10 * std::max(before, 1e-300) && after > 0.0) {
        col /= after;
        break;
      }
      col = random_vector(X.rows(), rng);
    }
  }
}

void fix_sign(Vector& v) {
  if (v.sum() < 0.0) v = -v;
}

std::vector<EigenPair> dense_eigenpairs(const SparseOperator& A, const Vector* constraint,
                                        int k, double cell_volume) {
  Eigen::MatrixXd M = A.to_dense();
  M = 0.5 * (M + M.transpose()).eval();
  Eigen::MatrixXd basis;
  if (constraint) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(*constraint);
    Eigen::MatrixXd Q = qr.householderQ();
    basis = Q.rightCols(M.rows() - 1);
  }
  const Eigen::MatrixXd H = constraint ? Eigen::MatrixXd(basis.transpose() * M * basis) : M;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  if (es.info() != Eigen::Success) {
    throw EigenSolverError("dense eigendecomposition failed", {});
  }
  std::vector<EigenPair> pairs;
  const double scale = 1.0 / std::sqrt(cell_volume);
  for (int j = 0; j < k; ++j) {
    Vector x = constraint ? Vector(basis * es.eigenvectors().col(j))
                          : Vector(es.eigenvectors().col(j));
    x.normalize();
    fix_sign(x);
    Vector r = M * x - es.eigenvalues()[j] * x;
    if (constraint) r -= constraint->dot(r) * *constraint;
    pairs.push_back({es.eigenvalues()[j], scale * x, r.norm()});
  }
  return pairs;
}

std::vector<EigenPair> iterative_eigenpairs(const SparseOperator& A, const Vector* constraint,
                                            int k, double cell_volume,
                                            const EigenOptions& options) {
  const Eigen::Index n = A.dimension();
  const Eigen::Index available = n - (constraint ? 1 : 0);
  const Eigen::Index m = std::min<Eigen::Index>(k + options.guard_vectors, available);
  Rng rng(options.seed);

  Eigen::MatrixXd X(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (j < static_cast<Eigen::Index>(options.initial_guesses.size()) &&
        options.initial_guesses[j].size() == n) {
      X.col(j) = options.initial_guesses[j];
    } else {
      X.col(j) = random_vector(n, rng);
    }
  }
  orthonormalize(X, constraint, rng);

  // Inverse of A restricted to the constraint complement:
  // y = A^-1 x - (c'A^-1 x / c'A^-1 c) A^-1 c.
  Vector q;
  double cq = 1.0;
  if (constraint) {
    q = cg_solve(A, *constraint, options.cg).x;
    cq = constraint->dot(q);
    if (!(cq > 0.0)) throw OperatorError("constrained eigensolve: operator not positive definite");
  }

  Eigen::MatrixXd Y(n, m), AQ(n, m);
  Eigen::VectorXd theta;
  std::vector<double> residuals(static_cast<std::size_t>(k), 0.0);
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int it = 0; it < options.max_iterations; ++it) {
    for (Eigen::Index j = 0; j < m; ++j) {
      Vector y = cg_solve(A, X.col(j), options.cg).x;
      if (constraint) y -= (constraint->dot(y) / cq) * q;
      Y.col(j) = y;
    }
    orthonormalize(Y, constraint, rng);
    for (Eigen::Index j = 0; j < m; ++j) {
      Vector aq = A.apply(Y.col(j));
      if (constraint) aq -= constraint->dot(aq) * *constraint;
      AQ.col(j) = aq;
    }
    Eigen::MatrixXd H = Y.transpose() * AQ;
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    theta = es.eigenvalues();
    X = Y * es.eigenvectors();
    const Eigen::MatrixXd R = AQ * es.eigenvectors() - X * theta.asDiagonal();

    double worst = 0.0;
    bool done = true;
    for (int j = 0; j < k; ++j) {
      residuals[j] = R.col(j).norm();
      const double scale = std::max(std::abs(theta[j]), 1.0);
      worst = std::max(worst, residuals[j] / scale);
      if (residuals[j] > options.residual_tolerance * scale) done = false;
    }
    if (done) {
      std::vector<EigenPair> pairs;
      const double s = 1.0 / std::sqrt(cell_volume);
      for (int j = 0; j < k; ++j) {
        Vector x = X.col(j);
        fix_sign(x);
        pairs.push_back({theta[j], s * x, residuals[j]});
      }
      return pairs;
    }
    if (worst < 0.9 * best) {
      best = worst;
      since_best = 0;
    } else if (++since_best > 40) {
      break;
    }
  }
  throw EigenSolverError("inverse iteration stagnated before reaching the residual tolerance",
                         residuals);
}

std::vector<EigenPair> solve_eigen(const SparseOperator& A, const Vector* constraint, int k,
                                   double cell_volume, const EigenOptions& options) {
  const Eigen::Index n = A.dimension();
  const Eigen::Index available = n - (constraint ? 1 : 0);
  if (k < 1 || k > 4) throw ConfigError("smallest_eigenpairs supports 1 <= k <= 4");
  if (k > available) throw ConfigError("more eigenpairs requested than dimensions");
  if (!(cell_volume > 0.0)) throw ConfigError("cell volume must be positive");
  if (options.allow_dense && n <= options.dense_threshold) {
    return dense_eigenpairs(A, constraint, k, cell_volume);
  }
  return iterative_eigenpairs(A, constraint, k, cell_volume, options);
}

}  // namespace

std::vector<EigenPair> smallest_eigenpairs(const SparseOperator& A, int k,
                                           const GridSpec& grid, const EigenOptions& options) {
  if (A.dimension() != grid.size) throw DimensionError("operator size differs from grid N");
  return smallest_eigenpairs(A, k, grid.cell_volume(), options);
}

std::vector<EigenPair> smallest_eigenpairs(const SparseOperator& A, int k, double cell_volume,
                                           const EigenOptions& options) {
  return solve_eigen(A, nullptr, k, cell_volume, options);
}

std::vector<EigenPair> smallest_constrained_eigenpairs(const SparseOperator& A,
                                                       const VectorRef& constraint, int k,
                                                       double cell_volume,
                                                       const EigenOptions& options) {
  if (constraint.size() != A.dimension()) throw DimensionError("constraint length mismatch");
  const double norm = constraint.norm();
  if (!(norm > 0.0)) throw DomainError("constraint vector is zero");
  const Vector c = constraint / norm;
  return solve_eigen(A, &c, k, cell_volume, options);
}

}  // namespace sobolev

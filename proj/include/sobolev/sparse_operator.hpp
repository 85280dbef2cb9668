#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <iosfwd>
#include <string>

namespace sobolev {

using Vector = Eigen::VectorXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

/// Symmetric sparse matrix in compressed-row layout.
///
/// Entries are assembled once and never mutated afterwards; derived operators
/// (shifted diagonals, the HOI coupling) are produced as new objects that share
/// the sparsity pattern of their source.
class SparseOperator {
 public:
  using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

  SparseOperator() = default;
  explicit SparseOperator(Storage matrix, bool symmetric = true);

  static SparseOperator identity(Eigen::Index n);
  static SparseOperator diagonal(const VectorRef& d);

  Eigen::Index dimension() const { return matrix_.rows(); }
  Eigen::Index nonzeros() const { return matrix_.nonZeros(); }
  bool symmetric() const { return symmetric_; }

  const Storage& matrix() const { return matrix_; }

  /// y = A x. Row-wise accumulation in column order, so results are bitwise
  /// reproducible.
  Vector apply(const VectorRef& x) const;
  void apply(const VectorRef& x, Vector& y) const;

  Vector diagonal_entries() const;
  double coeff(Eigen::Index i, Eigen::Index j) const;

  /// Returns A + diag(d) on the same pattern; every diagonal entry must exist.
  SparseOperator plus_diagonal(const VectorRef& d) const;

  /// Largest |A(i,j) - A(j,i)|.
  double asymmetry() const;
  /// True iff every off-diagonal entry is <= 0 and every diagonal entry > 0.
  bool is_m_matrix_sign_pattern() const;
  /// Lower bound on the spectrum from Gershgorin discs.
  double gershgorin_lower_bound() const;

  Eigen::MatrixXd to_dense() const;

  /// MatrixMarket coordinate format, general real layout, 1-based indices.
  void write_matrix_market(std::ostream& os) const;
  void write_matrix_market(const std::string& path) const;
  static SparseOperator read_matrix_market(std::istream& is);

 private:
  Storage matrix_;
  bool symmetric_ = true;
};

}  // namespace sobolev

#include "sobolev/sparse_operator.hpp"

#include "sobolev/errors.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace sobolev {

SparseOperator::SparseOperator(Storage matrix, bool symmetric)
    : matrix_(std::move(matrix)), symmetric_(symmetric) {
  if (matrix_.rows() != matrix_.cols()) {
    throw DimensionError("SparseOperator must be square");
  }
  matrix_.makeCompressed();
}

SparseOperator SparseOperator::identity(Eigen::Index n) {
  return diagonal(Vector::Ones(n));
}

SparseOperator SparseOperator::diagonal(const VectorRef& d) {
  Storage m(d.size(), d.size());
  m.reserve(Eigen::VectorXi::Constant(d.size(), 1));
  for (Eigen::Index i = 0; i < d.size(); ++i) m.insert(i, i) = d[i];
  return SparseOperator(std::move(m), true);
}

Vector SparseOperator::apply(const VectorRef& x) const {
  Vector y(dimension());
  apply(x, y);
  return y;
}

void SparseOperator::apply(const VectorRef& x, Vector& y) const {
  if (x.size() != dimension()) throw DimensionError("apply: size mismatch");
  y.resize(dimension());
  const int* outer = matrix_.outerIndexPtr();
  const int* inner = matrix_.innerIndexPtr();
  const double* val = matrix_.valuePtr();
  for (Eigen::Index i = 0; i < dimension(); ++i) {
    double acc = 0.0;
    for (int k = outer[i]; k < outer[i + 1]; ++k) acc += val[k] * x[inner[k]];
    y[i] = acc;
  }
}

Vector SparseOperator::diagonal_entries() const {
  Vector d = Vector::Zero(dimension());
  for (Eigen::Index i = 0; i < matrix_.outerSize(); ++i) {
    for (Storage::InnerIterator it(matrix_, i); it; ++it) {
      if (it.col() == i) d[i] = it.value();
    }
  }
  return d;
}

double SparseOperator::coeff(Eigen::Index i, Eigen::Index j) const {
  return matrix_.coeff(i, j);
}

SparseOperator SparseOperator::plus_diagonal(const VectorRef& d) const {
  if (d.size() != dimension()) throw DimensionError("plus_diagonal: size mismatch");
  Storage m = matrix_;
  for (Eigen::Index i = 0; i < m.outerSize(); ++i) {
    bool found = false;
    for (Storage::InnerIterator it(m, i); it; ++it) {
      if (it.col() == i) {
        it.valueRef() += d[i];
        found = true;
      }
    }
    if (!found) throw OperatorError("plus_diagonal: missing diagonal entry");
  }
  return SparseOperator(std::move(m), symmetric_);
}

double SparseOperator::asymmetry() const {
  Storage t = matrix_.transpose();
  Storage diff = matrix_ - t;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < diff.nonZeros(); ++k) {
    worst = std::max(worst, std::abs(diff.valuePtr()[k]));
  }
  return worst;
}

bool SparseOperator::is_m_matrix_sign_pattern() const {
  for (Eigen::Index i = 0; i < matrix_.outerSize(); ++i) {
    bool has_diag = false;
    for (Storage::InnerIterator it(matrix_, i); it; ++it) {
      if (it.col() == i) {
        if (!(it.value() > 0.0)) return false;
        has_diag = true;
      } else if (it.value() > 0.0) {
        return false;
      }
    }
    if (!has_diag) return false;
  }
  return true;
}

double SparseOperator::gershgorin_lower_bound() const {
  double lower = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < matrix_.outerSize(); ++i) {
    double diag = 0.0, off = 0.0;
    for (Storage::InnerIterator it(matrix_, i); it; ++it) {
      if (it.col() == i) diag = it.value();
      else off += std::abs(it.value());
    }
    lower = std::min(lower, diag - off);
  }
  return lower;
}

Eigen::MatrixXd SparseOperator::to_dense() const {
  return Eigen::MatrixXd(matrix_);
}

void SparseOperator::write_matrix_market(std::ostream& os) const {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << dimension() << ' ' << dimension() << ' ' << nonzeros() << '\n';
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < matrix_.outerSize(); ++i) {
    for (Storage::InnerIterator it(matrix_, i); it; ++it) {
      os << (it.row() + 1) << ' ' << (it.col() + 1) << ' ' << it.value() << '\n';
    }
  }
}

void SparseOperator::write_matrix_market(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  write_matrix_market(out);
}

SparseOperator SparseOperator::read_matrix_market(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("%%MatrixMarket", 0) != 0) {
    throw ConfigError("not a MatrixMarket stream");
  }
  while (std::getline(is, line) && !line.empty() && line[0] == '%') {
  }
  std::istringstream header(line);
  Eigen::Index rows = 0, cols = 0, nnz = 0;
  if (!(header >> rows >> cols >> nnz) || rows != cols) {
    throw ConfigError("bad MatrixMarket size line");
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(nnz));
  for (Eigen::Index k = 0; k < nnz; ++k) {
    Eigen::Index i = 0, j = 0;
    double v = 0.0;
    if (!(is >> i >> j >> v)) throw ConfigError("truncated MatrixMarket entries");
    triplets.emplace_back(i - 1, j - 1, v);
  }
  Storage m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return SparseOperator(std::move(m), true);
}

}  // namespace sobolev

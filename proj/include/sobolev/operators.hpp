#pragma once

#include "sobolev/grid.hpp"
#include "sobolev/sparse_operator.hpp"

#include <string>

namespace sobolev {

enum class Variant { GPE, HOI, AlphaPower };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Nonlinearity parameters. GPE: alpha = 1, delta = 0. HOI: alpha = 1,
/// delta > 0. AlphaPower: delta = 0, any alpha > 0.
struct ModelParams {
  double beta = 0.0;
  double delta = 0.0;
  double alpha = 1.0;
  Variant variant = Variant::GPE;

  static ModelParams gpe(double beta) { return {beta, 0.0, 1.0, Variant::GPE}; }
  static ModelParams hoi(double beta, double delta) {
    return {beta, delta, 1.0, Variant::HOI};
  }
  static ModelParams alpha_power(double beta, double alpha) {
    return {beta, 0.0, alpha, Variant::AlphaPower};
  }

  /// Throws ConfigError when the fields contradict the variant.
  void validate() const;
};

/// Grid, -L_h, potential and model bundled; everything an operator needs.
struct Problem {
  GridSpec grid;
  SparseOperator laplacian;  // -L_h
  Potential potential;
  ModelParams params;

  Problem(GridSpec g, Potential v, ModelParams p);
  Problem(GridSpec g, SparseOperator neg_laplacian, Potential v, ModelParams p);

  Eigen::Index size() const { return grid.size; }
};

/// Discrete energy E_h(u); u need not be normalized.
///   GPE:        h^d [u'(-L)u + sum V u^2 + beta/2 sum u^4]
///   HOI:        GPE + h^d delta/2 (u^2)'(-L)(u^2)
///   AlphaPower: h^d [u'(-L)u + sum V u^2 + beta/(alpha+1) sum |u|^(2 alpha + 2)]
double energy(const Problem& problem, const VectorRef& u);

/// Euclidean gradient of E_h, identical to 2 h^d A_u u for every variant.
Vector energy_gradient(const Problem& problem, const VectorRef& u);

/// The u-independent operator A_0 = -L_h + diag(V).
SparseOperator assemble_A0(const Problem& problem);

/// A_u = -L_h + diag(V + beta u^2) for GPE,
///       + delta D_u (-L_h) D_u for HOI,
///       -L_h + diag(V + beta |u|^(2 alpha)) for AlphaPower.
SparseOperator assemble_A_u(const Problem& problem, const VectorRef& u);

/// A_u w without assembling the HOI coupling.
Vector apply_A_u_matrix_free(const Problem& problem, const VectorRef& u,
                             const VectorRef& w);

/// (z, w)_{a_u} = z' A_u w h^d.
double a_u_inner(const VectorRef& z, const VectorRef& w, const SparseOperator& A_u,
                 const GridSpec& grid);
double a_u_norm(const VectorRef& z, const SparseOperator& A_u, const GridSpec& grid);

/// Rayleigh quotient (u,u)_{a_u} / (u,u)_{L^2_h}.
double eigenvalue_estimate(const VectorRef& u, const SparseOperator& A_u,
                           const GridSpec& grid);

/// ||A_u u - lambda(u) u||_{L^2_h}.
double residual_norm(const VectorRef& u, const SparseOperator& A_u, const GridSpec& grid);

/// Half the Euclidean Hessian of E_h divided by h^d:
///   -L + diag(V + 3 beta u^2) for GPE,
///   + delta [diag(-L u^2) + 2 D_u (-L) D_u] for HOI,
///   -L + diag(V + beta (2 alpha + 1) |u|^(2 alpha)) for AlphaPower.
SparseOperator assemble_energy_hessian(const Problem& problem, const VectorRef& u);

/// Entrywise |u|^(2 alpha), evaluated as (u^2)^alpha.
Vector abs_power(const VectorRef& u, double alpha);

}  // namespace sobolev

#pragma once

#include "sobolev/grid.hpp"
#include "sobolev/linsolve.hpp"
#include "sobolev/sparse_operator.hpp"

namespace sobolev {

/// Grid function on the L^2_h unit sphere (when `normalized`).
struct State {
  Vector values;
  bool normalized = false;
};

/// R(u) = u / ||u||_{L^2_h}. Throws DomainError for the zero vector.
State retract(const VectorRef& u, const GridSpec& grid);

/// Projection onto T_u M = {xi : (xi, u)_{L^2_h} = 0} along G_u u, the
/// a_u-orthogonal complement of the tangent space:
///   P(xi) = xi - (xi, u) / (u, G_u u) * G_u u.
Vector tangent_project(const VectorRef& xi, const VectorRef& u, const SparseOperator& A_u,
                       const GridSpec& grid, const CgConfig& cg);
Vector tangent_project(const VectorRef& xi, const VectorRef& u, const VectorRef& greens_of_u,
                       const GridSpec& grid);

/// a_u-manifold gradient at a normalized u. G_u u is kept so a PGD step and
/// the convergence diagnostics need no further solve.
struct ManifoldGradient {
  Vector direction;          // u - G_u u / (u, G_u u)
  double grad_norm_sq_a_u;   // (u,u)_{a_u} - 1 / (u, G_u u), via the identity
  double grad_norm_a_u;      // ||direction||_{a_u}, evaluated directly
  Vector greens_of_u;        // G_u u
  double inner_u_Gu;         // (u, G_u u)_{L^2_h}
  int cg_iterations = 0;
};

/// Manifold identities hold to ~1e-8 when `cg` runs at 1e-10.
ManifoldGradient manifold_gradient(const VectorRef& u, const SparseOperator& A_u,
                                   const GridSpec& grid, const CgConfig& cg,
                                   const Vector* greens_warm_start = nullptr);

}  // namespace sobolev

#include "sobolev/manifold.hpp"

#include "sobolev/errors.hpp"
#include "sobolev/operators.hpp"

#include <cmath>

namespace sobolev {

State retract(const VectorRef& u, const GridSpec& grid) {
  const double norm = l2h_norm(u, grid);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DomainError("retract: cannot normalize a zero or non-finite vector");
  }
  return State{u / norm, true};
}

Vector tangent_project(const VectorRef& xi, const VectorRef& u, const VectorRef& greens_of_u,
                       const GridSpec& grid) {
  const double denom = l2h_inner(u, greens_of_u, grid);
  if (!(denom > 0.0)) throw OperatorError("tangent_project: (u, G_u u) <= 0");
  return xi - (l2h_inner(xi, u, grid) / denom) * greens_of_u;
}

Vector tangent_project(const VectorRef& xi, const VectorRef& u, const SparseOperator& A_u,
                       const GridSpec& grid, const CgConfig& cg) {
  const Vector gu = greens_apply(u, A_u, cg).x;
  return tangent_project(xi, u, gu, grid);
}

ManifoldGradient manifold_gradient(const VectorRef& u, const SparseOperator& A_u,
                                   const GridSpec& grid, const CgConfig& cg,
                                   const Vector* greens_warm_start) {
  CgResult solve = greens_apply(u, A_u, cg, greens_warm_start);
  ManifoldGradient g;
  g.cg_iterations = solve.iterations;
  g.greens_of_u = std::move(solve.x);
  g.inner_u_Gu = l2h_inner(u, g.greens_of_u, grid);
  if (!(g.inner_u_Gu > 0.0)) {
    throw OperatorError("manifold_gradient: (u, G_u u) <= 0, the Greens solve is broken");
  }
  g.direction = u - g.greens_of_u / g.inner_u_Gu;
  g.grad_norm_sq_a_u = a_u_inner(u, u, A_u, grid) - 1.0 / g.inner_u_Gu;
  g.grad_norm_a_u = a_u_norm(g.direction, A_u, grid);
  return g;
}

}  // namespace sobolev

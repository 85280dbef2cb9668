#include "sobolev/operators.hpp"

#include "sobolev/errors.hpp"

#include <cmath>

namespace sobolev {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::GPE: return "gpe";
    case Variant::HOI: return "hoi";
    case Variant::AlphaPower: return "alpha-power";
  }
  return "gpe";
}

Variant variant_from_string(const std::string& s) {
  if (s == "gpe" || s == "GPE") return Variant::GPE;
  if (s == "hoi" || s == "HOI") return Variant::HOI;
  if (s == "alpha-power" || s == "alpha" || s == "AlphaPower") return Variant::AlphaPower;
  throw ConfigError("unknown model variant '" + s + "'");
}

void ModelParams::validate() const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be >= 0");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("delta must be >= 0");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be > 0");
  switch (variant) {
    case Variant::GPE:
      if (delta != 0.0 || alpha != 1.0) {
        throw ConfigError("GPE variant requires alpha = 1 and delta = 0");
      }
      break;
    case Variant::HOI:
      if (alpha != 1.0 || !(delta > 0.0)) {
        throw ConfigError("HOI variant requires alpha = 1 and delta > 0");
      }
      break;
    case Variant::AlphaPower:
      if (delta != 0.0) throw ConfigError("AlphaPower variant requires delta = 0");
      break;
  }
}

Problem::Problem(GridSpec g, Potential v, ModelParams p)
    : Problem(g, assemble_laplacian(g), std::move(v), p) {}

Problem::Problem(GridSpec g, SparseOperator neg_laplacian, Potential v, ModelParams p)
    : grid(std::move(g)),
      laplacian(std::move(neg_laplacian)),
      potential(std::move(v)),
      params(p) {
  params.validate();
  if (potential.values.size() != grid.size || laplacian.dimension() != grid.size) {
    throw DimensionError("problem components disagree on N");
  }
}

namespace {

void check_state(const Problem& problem, const VectorRef& u) {
  if (u.size() != problem.size()) throw DimensionError("state length differs from N");
  if (!u.allFinite()) throw NumericError("state has non-finite entries");
}

// Multiplier of the local nonlinearity in A_u: beta u^2 or beta |u|^(2 alpha).
Vector nonlinear_diagonal(const ModelParams& params, const VectorRef& u) {
  if (params.variant == Variant::AlphaPower) return params.beta * abs_power(u, params.alpha);
  return params.beta * u.array().square().matrix();
}

}  // namespace

Vector abs_power(const VectorRef& u, double alpha) {
  return u.array().square().pow(alpha).matrix();
}

double energy(const Problem& problem, const VectorRef& u) {
  check_state(problem, u);
  const auto& p = problem.params;
  const Vector Lu = problem.laplacian.apply(u);
  const Vector u2 = u.array().square();

  double total = accurate_dot(u, Lu) + accurate_dot(problem.potential.values, u2);
  switch (p.variant) {
    case Variant::GPE:
      total += 0.5 * p.beta * accurate_dot(u2, u2);
      break;
    case Variant::HOI:
      total += 0.5 * p.beta * accurate_dot(u2, u2);
      total += 0.5 * p.delta * accurate_dot(u2, problem.laplacian.apply(u2));
      break;
    case Variant::AlphaPower: {
      const Vector pw = abs_power(u, p.alpha + 1.0);
      total += p.beta / (p.alpha + 1.0) * accurate_sum(pw);
      break;
    }
  }
  return total * problem.grid.cell_volume();
}

Vector energy_gradient(const Problem& problem, const VectorRef& u) {
  return 2.0 * problem.grid.cell_volume() * apply_A_u_matrix_free(problem, u, u);
}

SparseOperator assemble_A0(const Problem& problem) {
  return problem.laplacian.plus_diagonal(problem.potential.values);
}

SparseOperator assemble_A_u(const Problem& problem, const VectorRef& u) {
  check_state(problem, u);
  const auto& p = problem.params;
  Vector diag = problem.potential.values + nonlinear_diagonal(p, u);
  if (p.variant != Variant::HOI) return problem.laplacian.plus_diagonal(diag);

  // delta D_u (-L) D_u shares the stencil pattern: entry (i,j) of -L scales by
  // 1 + delta u_i u_j.
  SparseOperator::Storage m = problem.laplacian.matrix();
  for (Eigen::Index i = 0; i < m.outerSize(); ++i) {
    for (SparseOperator::Storage::InnerIterator it(m, i); it; ++it) {
      it.valueRef() *= 1.0 + p.delta * (u[i] * u[it.col()]);
    }
  }
  return SparseOperator(std::move(m), true).plus_diagonal(diag);
}

Vector apply_A_u_matrix_free(const Problem& problem, const VectorRef& u,
                             const VectorRef& w) {
  check_state(problem, u);
  if (w.size() != problem.size()) throw DimensionError("A_u w: length mismatch");
  const auto& p = problem.params;
  Vector out = problem.laplacian.apply(w);
  out.array() += (problem.potential.values + nonlinear_diagonal(p, u)).array() * w.array();
  if (p.variant == Variant::HOI) {
    const Vector uw = u.array() * w.array();
    out.array() += p.delta * u.array() * problem.laplacian.apply(uw).array();
  }
  return out;
}

double a_u_inner(const VectorRef& z, const VectorRef& w, const SparseOperator& A_u,
                 const GridSpec& grid) {
  if (z.size() != A_u.dimension() || w.size() != A_u.dimension()) {
    throw DimensionError("a_u_inner: length mismatch");
  }
  return accurate_dot(z, A_u.apply(w)) * grid.cell_volume();
}

double a_u_norm(const VectorRef& z, const SparseOperator& A_u, const GridSpec& grid) {
  return std::sqrt(std::max(0.0, a_u_inner(z, z, A_u, grid)));
}

double eigenvalue_estimate(const VectorRef& u, const SparseOperator& A_u,
                           const GridSpec& grid) {
  const double mass = l2h_inner(u, u, grid);
  if (!(mass > 0.0)) throw DomainError("eigenvalue_estimate: zero state");
  return a_u_inner(u, u, A_u, grid) / mass;
}

double residual_norm(const VectorRef& u, const SparseOperator& A_u, const GridSpec& grid) {
  const double lambda = eigenvalue_estimate(u, A_u, grid);
  const Vector r = A_u.apply(u) - lambda * u;
  return l2h_norm(r, grid);
}

SparseOperator assemble_energy_hessian(const Problem& problem, const VectorRef& u) {
  check_state(problem, u);
  const auto& p = problem.params;
  Vector diag = problem.potential.values;
  switch (p.variant) {
    case Variant::GPE:
      diag.array() += 3.0 * p.beta * u.array().square();
      return problem.laplacian.plus_diagonal(diag);
    case Variant::AlphaPower:
      diag += p.beta * (2.0 * p.alpha + 1.0) * abs_power(u, p.alpha);
      return problem.laplacian.plus_diagonal(diag);
    case Variant::HOI: {
      const Vector u2 = u.array().square();
      diag.array() += 3.0 * p.beta * u2.array();
      diag += p.delta * problem.laplacian.apply(u2);
      SparseOperator::Storage m = problem.laplacian.matrix();
      for (Eigen::Index i = 0; i < m.outerSize(); ++i) {
        for (SparseOperator::Storage::InnerIterator it(m, i); it; ++it) {
          it.valueRef() *= 1.0 + 2.0 * p.delta * (u[i] * u[it.col()]);
        }
      }
      return SparseOperator(std::move(m), true).plus_diagonal(diag);
    }
  }
  return problem.laplacian;
}

}  // namespace sobolev

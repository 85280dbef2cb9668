#include "sobolev/errors.hpp"
#include "sobolev/manifold.hpp"
#include "sobolev/operators.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <Eigen/LU>

using namespace sobolev;
using namespace sobolev::test;

namespace {

const CgConfig kTight{1e-12, 0, Preconditioner::Jacobi};

struct Fixture {
  GridSpec g = square(15);
  Problem p{g, single_well_potential(g), ModelParams::gpe(20.0)};
  Vector u = normalized(random_positive(g.size, 3), g);
  SparseOperator A = assemble_A_u(p, u);
};

}  // namespace

TEST(Retract, NormalizesAndIsIdempotent) {
  const GridSpec g = square(9);
  const Vector v = random_state(g.size, 1);
  const State r = retract(v, g);
  EXPECT_TRUE(r.normalized);
  EXPECT_NEAR(l2h_norm(r.values, g), 1.0, 1e-15);
  EXPECT_LT((retract(r.values, g).values - r.values).norm(), 1e-14);
  EXPECT_LT((retract(3.5 * v, g).values - r.values).norm(), 1e-14);
  EXPECT_LT((retract(-v, g).values + r.values).norm(), 1e-14);
}

TEST(Retract, Errors) {
  const GridSpec g = unit_line(4);
  EXPECT_THROW(retract(Vector::Zero(4), g), DomainError);
  EXPECT_THROW(retract(Vector::Ones(3), g), DimensionError);
  Vector v = Vector::Ones(4);
  v[0] = std::nan("");
  EXPECT_THROW(retract(v, g), DomainError);
}

TEST(TangentProject, LandsInTangentSpaceAndIsIdempotent) {
  Fixture f;
  for (std::uint64_t seed = 5; seed < 9; ++seed) {
    const Vector xi = random_state(f.g.size, seed);
    const Vector P = tangent_project(xi, f.u, f.A, f.g, kTight);
    EXPECT_NEAR(l2h_inner(P, f.u, f.g), 0.0, 1e-12 * l2h_norm(xi, f.g));
    const Vector PP = tangent_project(P, f.u, f.A, f.g, kTight);
    EXPECT_LT((PP - P).norm(), 1e-10 * P.norm());
  }
}

TEST(TangentProject, RemovesTheGreensDirectionAndKeepsTangents) {
  Fixture f;
  const Vector Gu = Eigen::PartialPivLU<Eigen::MatrixXd>(f.A.to_dense()).solve(f.u);
  EXPECT_LT(tangent_project(Gu, f.u, Gu, f.g).norm(), 1e-12 * Gu.norm());
  Vector t = random_state(f.g.size, 2);
  t -= l2h_inner(t, f.u, f.g) * f.u;
  EXPECT_LT((tangent_project(t, f.u, Gu, f.g) - t).norm(), 1e-12 * t.norm());
  // The complement is a_u-orthogonal to the image.
  const Vector P = tangent_project(random_state(f.g.size, 4), f.u, Gu, f.g);
  EXPECT_NEAR(a_u_inner(P, Gu, f.A, f.g), 0.0, 1e-10 * a_u_norm(P, f.A, f.g) * a_u_norm(Gu, f.A, f.g));
}

TEST(ManifoldGradient, DefinitionAndNormIdentity) {
  Fixture f;
  const ManifoldGradient mg = manifold_gradient(f.u, f.A, f.g, kTight);
  const Vector Gu = Eigen::PartialPivLU<Eigen::MatrixXd>(f.A.to_dense()).solve(f.u);
  const double uGu = l2h_inner(f.u, Gu, f.g);
  const Vector expected = f.u - Gu / uGu;
  EXPECT_LT((mg.direction - expected).norm(), 1e-9 * expected.norm());
  EXPECT_NEAR(mg.inner_u_Gu, uGu, 1e-12 * uGu);
  EXPECT_NEAR(l2h_inner(mg.direction, f.u, f.g), 0.0, 1e-12);
  const double independent = a_u_inner(f.u, f.u, f.A, f.g) - 1.0 / uGu;
  EXPECT_NEAR(mg.grad_norm_sq_a_u, independent, 1e-8 * a_u_inner(f.u, f.u, f.A, f.g));
  EXPECT_NEAR(mg.grad_norm_a_u * mg.grad_norm_a_u, independent, 1e-8 * independent);
  EXPECT_GT(mg.cg_iterations, 0);
}

TEST(ManifoldGradient, RieszRepresentationOfEnergyDerivative) {
  // For tangent xi, dE(u)[xi] = 2 (grad, xi)_{a_u}.
  Fixture f;
  const ManifoldGradient mg = manifold_gradient(f.u, f.A, f.g, kTight);
  for (std::uint64_t seed = 11; seed < 14; ++seed) {
    Vector xi = random_state(f.g.size, seed);
    xi -= l2h_inner(xi, f.u, f.g) * f.u;
    const double eps = 1e-6;
    const double fd = (energy(f.p, f.u + eps * xi) - energy(f.p, f.u - eps * xi)) / (2 * eps);
    const double riesz = 2.0 * a_u_inner(mg.direction, xi, f.A, f.g);
    EXPECT_NEAR(fd, riesz, 1e-5 * std::abs(riesz));
  }
}

TEST(ManifoldGradient, VanishesAtEigenvector) {
  const GridSpec g = square(15);
  const Problem p(g, single_well_potential(g), ModelParams::gpe(0.0));
  const SparseOperator A0 = assemble_A0(p);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A0.to_dense());
  const Vector w = normalized(es.eigenvectors().col(0), g);
  const ManifoldGradient mg = manifold_gradient(w, A0, g, kTight);
  EXPECT_LT(mg.grad_norm_a_u, 1e-8);
  EXPECT_LT(std::abs(mg.grad_norm_sq_a_u), 1e-10 * es.eigenvalues()[0]);
  Vector guess = mg.greens_of_u;
  const ManifoldGradient warm = manifold_gradient(w, A0, g, kTight, &guess);
  EXPECT_LE(warm.cg_iterations, 1);
}

TEST(Retract, SecondOrderDeviationFromTangentStep) {
  Fixture f;
  Vector xi = random_state(f.g.size, 21);
  xi -= l2h_inner(xi, f.u, f.g) * f.u;
  const double xn = l2h_norm(xi, f.g);
  for (double t : {1e-1, 1e-2, 1e-3}) {
    const Vector step = f.u + t * xi;
    const double dev = l2h_norm(retract(step, f.g).values - step, f.g);
    // 1 - 1/sqrt(1 + t^2 |xi|^2) ~ t^2 |xi|^2 / 2, times |u + t xi|.
    const double expected = std::sqrt(1 + t * t * xn * xn) - 1.0;
    EXPECT_NEAR(dev, expected, 1e-10 + 1e-6 * expected) << "t=" << t;
  }
}

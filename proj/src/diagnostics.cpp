#include "sobolev/diagnostics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sobolev {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

nlohmann::json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

// ---- rate fits ------------------------------------------------------------

RateFit rate_fit_range(const std::vector<double>& errors, int begin, int end) {
  if (begin < 0 || end > static_cast<int>(errors.size()) || end - begin < 3) {
    throw DiagnosticError("rate_fit: need at least three points in the window");
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const double m = end - begin;
  for (int n = begin; n < end; ++n) {
    if (!(errors[n] > 0.0) || !std::isfinite(errors[n])) {
      throw DomainError("rate_fit: errors must be positive and finite");
    }
    const double x = n, y = std::log(errors[n]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double vx = sxx - sx * sx / m;
  const double vy = syy - sy * sy / m;
  const double cxy = sxy - sx * sy / m;
  RateFit fit;
  fit.begin = begin;
  fit.end = end;
  const double slope = cxy / vx;
  fit.rate_c = std::exp(slope);
  fit.r_squared = vy > 0.0 ? std::clamp(cxy * cxy / (vx * vy), 0.0, 1.0) : 1.0;
  return fit;
}

RateFit rate_fit(const std::vector<double>& errors, int window) {
  if (window < 3) throw DiagnosticError("rate_fit: window must be >= 3");
  if (static_cast<int>(errors.size()) < window) {
    throw DiagnosticError("rate_fit: fewer errors than the window");
  }
  const int n = static_cast<int>(errors.size());
  return rate_fit_range(errors, n - window, n);
}

std::pair<int, int> error_band(const std::vector<double>& errors, double upper, double lower) {
  const int n = static_cast<int>(errors.size());
  int begin = n;
  for (int i = 0; i < n; ++i) {
    if (errors[i] < upper) {
      begin = i;
      break;
    }
  }
  int end = begin;
  for (int i = n - 1; i >= begin; --i) {
    if (errors[i] > lower) {
      end = i + 1;
      break;
    }
  }
  return {begin, end};
}

// ---- Lojasiewicz triplet --------------------------------------------------

bool LojasiewiczReport::constants_finite_positive() const {
  return finite_positive(C_L) && finite_positive(C_D) && finite_positive(C_S);
}

bool LojasiewiczReport::passed() const {
  return constants_finite_positive() && contraction_bound < 1.0 && rate_c < 1.0;
}

nlohmann::json LojasiewiczReport::to_json() const {
  return {{"theta", theta},
          {"C_L", number_or_null(C_L)},
          {"C_D", number_or_null(C_D)},
          {"C_S", number_or_null(C_S)},
          {"tail_start", tail_start},
          {"tail_end", tail_end},
          {"noise_floor", noise_floor},
          {"rate_c", number_or_null(rate_c)},
          {"rate_r_squared", number_or_null(rate_r_squared)},
          {"rate_source", rate_source},
          {"contraction_bound", number_or_null(contraction_bound)},
          {"passed", passed()}};
}

std::string LojasiewiczReport::summary() const {
  std::ostringstream os;
  os.precision(6);
  os << "lojasiewicz: tail [" << tail_start << ", " << tail_end << ")  C_L=" << C_L
     << "  C_D=" << C_D << "  C_S=" << C_S << "  bound=" << contraction_bound
     << "  rate_c=" << rate_c << " (r2=" << rate_r_squared << ", " << rate_source << ")  "
     << (passed() ? "PASS" : "FAIL");
  return os.str();
}

LojasiewiczReport lojasiewicz_certify(const IterationTrace& trace, double E_star,
                                      double tail_fraction, double e_star_error) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw ConfigError("tail_fraction must lie in (0, 1]");
  }
  const auto& rec = trace.records;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    if (rec[i].iter != static_cast<int>(i)) {
      throw DiagnosticError("lojasiewicz_certify: trace must record every iteration");
    }
  }
  LojasiewiczReport report;
  report.noise_floor = std::max(100.0 * kEps * std::abs(E_star), e_star_error);

  int valid_end = 0;
  while (valid_end < static_cast<int>(rec.size()) &&
         rec[valid_end].energy - E_star > report.noise_floor) {
    ++valid_end;
  }
  // Steps n -> n+1 with both endpoints above the noise floor.
  const int steps = valid_end - 1;
  if (steps < 3) {
    throw DiagnosticError("lojasiewicz_certify: fewer than three steps above the noise floor");
  }
  const int length = std::max(3, static_cast<int>(std::ceil(tail_fraction * steps)));
  report.tail_start = steps - length;
  report.tail_end = valid_end;

  double cl = 0.0;
  double cd = std::numeric_limits<double>::infinity();
  double cs = std::numeric_limits<double>::infinity();
  for (int n = report.tail_start; n < valid_end; ++n) {
    const double g = rec[n].grad_norm;
    cl = std::max(cl, std::sqrt(rec[n].energy - E_star) / g);
    if (n + 1 < valid_end) {
      const double diff = rec[n].a0_diff;
      cd = std::min(cd, (rec[n].energy - rec[n + 1].energy) / (g * diff));
      cs = std::min(cs, diff / g);
    }
  }
  report.C_L = cl;
  report.C_D = cd;
  report.C_S = cs;
  report.contraction_bound = 1.0 - cd * cs / (2.0 * cl * cl);

  std::vector<double> errors(rec.size());
  bool have_l2 = true;
  for (int n = report.tail_start; n < valid_end; ++n) {
    if (!(rec[n].l2_error > 0.0)) have_l2 = false;
  }
  for (std::size_t n = 0; n < rec.size(); ++n) {
    errors[n] = have_l2 ? rec[n].l2_error : std::sqrt(std::max(rec[n].energy - E_star, 0.0));
  }
  report.rate_source = have_l2 ? "l2_error" : "energy";
  const RateFit fit = rate_fit_range(errors, report.tail_start, valid_end);
  report.rate_c = fit.rate_c;
  report.rate_r_squared = fit.r_squared;
  return report;
}

// ---- double ground state --------------------------------------------------

nlohmann::json GroundStateCertificate::to_json() const {
  return {{"lambda1", lambda1},     {"lambda2", lambda2},   {"gap", gap},
          {"alignment", alignment}, {"residual", residual}, {"tolerance", tolerance},
          {"passed", passed()}};
}

std::string GroundStateCertificate::summary() const {
  std::ostringstream os;
  os.precision(10);
  os << "ground state: lambda1=" << lambda1 << "  lambda2=" << lambda2 << "  gap=" << gap
     << "  alignment=" << alignment << "  residual=" << residual << "  "
     << (passed() ? "PASS" : "FAIL");
  return os.str();
}

GroundStateCertificate double_ground_state_check(const Problem& problem, const VectorRef& v,
                                                 const EigenOptions& eig, double tolerance) {
  const GridSpec& grid = problem.grid;
  const State vn = retract(v, grid);
  const SparseOperator A_v = assemble_A_u(problem, vn.values);
  const auto pairs = smallest_eigenpairs(A_v, 2, grid, eig);
  GroundStateCertificate c;
  c.tolerance = tolerance;
  c.lambda1 = pairs[0].value;
  c.lambda2 = pairs[1].value;
  c.gap = c.lambda2 - c.lambda1;
  c.alignment = std::min(1.0, std::abs(l2h_inner(vn.values, pairs[0].vector, grid)));
  c.residual = residual_norm(vn.values, A_v, grid);
  return c;
}

// ---- linear inequality ----------------------------------------------------

nlohmann::json LinearLojasiewiczReport::to_json() const {
  return {{"skipped", skipped}, {"notice", notice},         {"s", s},
          {"mu1", mu1},         {"mu2", mu2},               {"C_L", C_L},
          {"trials", trials},   {"violations", violations}, {"max_violation", max_violation},
          {"passed", passed()}};
}

namespace {

// Factorization of A used for G = A^-1 in the inequality.
class Inverse {
 public:
  explicit Inverse(const SparseOperator& A) {
    Eigen::SparseMatrix<double> m = A.matrix();
    llt_.compute(m);
    if (llt_.info() != Eigen::Success) {
      throw OperatorError("linear_lojasiewicz_test: operator is not positive definite");
    }
  }
  Vector solve(const VectorRef& b) const { return llt_.solve(b); }

 private:
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> llt_;
};

LinearLojasiewiczSides sides_with(const SparseOperator& A, const Inverse& inv, double mu1,
                                  double C_L, const VectorRef& u_in, double h) {
  const Vector u = u_in / std::sqrt(h * accurate_dot(u_in, u_in));
  const double uau = h * accurate_dot(u, A.apply(u));
  const double ugu = h * accurate_dot(u, inv.solve(u));
  LinearLojasiewiczSides s;
  s.lhs = uau - mu1;
  s.rhs = C_L * (uau - 1.0 / ugu);
  s.scale = uau;
  return s;
}

}  // namespace

LinearLojasiewiczSides linear_lojasiewicz_sides(const SparseOperator& A, const VectorRef& w1,
                                                double mu1, double C_L, const VectorRef& u,
                                                double cell_volume) {
  if (w1.size() != A.dimension() || u.size() != A.dimension()) {
    throw DimensionError("linear_lojasiewicz_sides: length mismatch");
  }
  const Inverse inv(A);
  return sides_with(A, inv, mu1, C_L, u, cell_volume);
}

LinearLojasiewiczReport linear_lojasiewicz_test(const SparseOperator& A, double s, int trials,
                                                std::uint64_t seed, double cell_volume,
                                                const EigenOptions& eig) {
  if (!(s > 0.0 && s < 1.0)) throw ConfigError("linear_lojasiewicz_test: need 0 < s < 1");
  if (trials < 0) throw ConfigError("linear_lojasiewicz_test: trials must be >= 0");
  const Eigen::Index n = A.dimension();
  if (n < 2) throw ConfigError("linear_lojasiewicz_test: need N >= 2");

  LinearLojasiewiczReport report;
  report.s = s;
  const auto pairs = smallest_eigenpairs(A, 2, cell_volume, eig);
  report.mu1 = pairs[0].value;
  report.mu2 = pairs[1].value;
  if (report.mu2 - report.mu1 < 1e-10) {
    report.skipped = true;
    report.notice = "eigenvalue gap below 1e-10; inequality not tested";
    return report;
  }
  report.C_L = 1.0 + report.mu2 / ((report.mu2 - report.mu1) * (1.0 - s * s));

  const Vector& w1 = pairs[0].vector;
  const Vector& w2 = pairs[1].vector;
  const double h = cell_volume;
  const Inverse inv(A);
  const double phi_max = 2.0 * std::asin(0.5 * s);
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    // Half the trials lean on w2, where the inequality is tightest.
    Vector z = random_vector(n, rng);
    if (t % 2 == 0) {
      z = w2 + (0.1 * rng.uniform()) * z / std::sqrt(h * z.squaredNorm());
    }
    for (int pass = 0; pass < 2; ++pass) z -= (h * accurate_dot(z, w1)) * w1;
    z /= std::sqrt(h * accurate_dot(z, z));
    const double phi = phi_max * rng.uniform();
    const Vector u = std::cos(phi) * w1 + std::sin(phi) * z;

    const LinearLojasiewiczSides sides = sides_with(A, inv, report.mu1, report.C_L, u, h);
    const double violation = (sides.lhs - sides.rhs) / sides.scale;
    report.max_violation = std::max(report.max_violation, violation);
    if (violation > kLinearLojasiewiczTolerance) ++report.violations;
    ++report.trials;
  }
  return report;
}

// ---- norm equivalence -----------------------------------------------------

nlohmann::json NormEquivalence::to_json() const {
  return {{"c_low_a0", c_low_a0},
          {"c_high_a0", c_high_a0},
          {"c_low_h1", c_low_h1},
          {"c_high_h1", c_high_h1}};
}

NormEquivalence norm_equivalence_probe(const Problem& problem, const VectorRef& u, int samples,
                                       std::uint64_t seed) {
  if (samples < 1) throw ConfigError("norm_equivalence_probe: samples must be >= 1");
  const GridSpec& grid = problem.grid;
  const SparseOperator A_u = assemble_A_u(problem, u);
  const SparseOperator A_0 = assemble_A0(problem);
  const SparseOperator H1 = problem.laplacian.plus_diagonal(Vector::Ones(grid.size));
  const CgConfig cg{1e-8, 0, Preconditioner::Jacobi};
  Rng rng(seed);
  NormEquivalence out;
  out.c_low_a0 = out.c_low_h1 = std::numeric_limits<double>::infinity();
  out.c_high_a0 = out.c_high_h1 = 0.0;
  for (int k = 0; k < samples; ++k) {
    Vector z = random_vector(grid.size, rng);
    // Alternate rough noise with a smoothed sample.
    if (k % 2 == 1) z = cg_solve(A_0, z, cg).x;
    const double au = a_u_norm(z, A_u, grid);
    const double r0 = a_u_norm(z, A_0, grid) / au;
    const double r1 = a_u_norm(z, H1, grid) / au;
    out.c_low_a0 = std::min(out.c_low_a0, r0);
    out.c_high_a0 = std::max(out.c_high_a0, r0);
    out.c_low_h1 = std::min(out.c_low_h1, r1);
    out.c_high_h1 = std::max(out.c_high_h1, r1);
  }
  return out;
}

// ---- retraction order -----------------------------------------------------

RetractionOrder retraction_order_probe(const VectorRef& u, const SparseOperator& A_u,
                                       const VectorRef& xi, const std::vector<double>& scales,
                                       const GridSpec& grid) {
  RetractionOrder out;
  const double xi_norm = a_u_norm(xi, A_u, grid);
  if (!(xi_norm > 0.0)) {
    out.degenerate = true;
    out.scales = scales;
    out.deviations.assign(scales.size(), 0.0);
    return out;
  }
  const Vector dir = xi / xi_norm;
  for (double t : scales) {
    const Vector v = u + t * dir;
    const double nv = l2h_norm(v, grid);
    // Below ~1e3 eps the normalization factor is pure roundoff.
    if (std::abs(1.0 / nv - 1.0) < 1e3 * kEps) continue;
    const State r = retract(v, grid);
    out.scales.push_back(t);
    out.deviations.push_back(a_u_norm(r.values - v, A_u, grid));
  }
  if (out.scales.size() < 2) {
    out.degenerate = true;
    return out;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(out.scales.size());
  for (std::size_t i = 0; i < out.scales.size(); ++i) {
    const double x = std::log(out.scales[i]), y = std::log(out.deviations[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.slope = (sxy - sx * sy / m) / (sxx - sx * sx / m);
  return out;
}

// ---- projected Hessian ----------------------------------------------------

double projected_hessian_smallest(const Problem& problem, const VectorRef& u_in,
                                  const EigenOptions& eig) {
  const GridSpec& grid = problem.grid;
  const Vector u = retract(u_in, grid).values;
  const SparseOperator A_u = assemble_A_u(problem, u);
  const double lambda = eigenvalue_estimate(u, A_u, grid);
  const SparseOperator J = assemble_energy_hessian(problem, u);
  const Eigen::Index n = grid.size;
  if (n < 2) throw ConfigError("projected_hessian_smallest: need N >= 2");

  if (eig.allow_dense && n <= eig.dense_threshold) {
    Eigen::MatrixXd M = J.to_dense();
    M.diagonal().array() -= lambda;
    M = 0.5 * (M + M.transpose()).eval();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(u.normalized());
    const Eigen::MatrixXd Q = qr.householderQ();
    const Eigen::MatrixXd B = Q.rightCols(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B.transpose() * M * B,
                                                      Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw EigenSolverError("projected Hessian eigensolve", {});
    return es.eigenvalues()[0];
  }

  // Shift J - lambda I to a positive definite operator for inverse iteration.
  const double sigma = std::max(0.0, lambda - J.gershgorin_lower_bound()) + 1.0;
  const SparseOperator M = J.plus_diagonal(Vector::Constant(n, sigma - lambda));
  const auto pairs = smallest_constrained_eigenpairs(M, u, 1, grid.cell_volume(), eig);
  return pairs[0].value - sigma;
}

EigenGap eigen_gap_monitor(const Problem& problem, const VectorRef& u, const EigenOptions& eig) {
  const SparseOperator A_u = assemble_A_u(problem, u);
  const auto pairs = smallest_eigenpairs(A_u, 2, problem.grid, eig);
  return {pairs[0].value, pairs[1].value, pairs[1].value - pairs[0].value};
}

}  // namespace sobolev

#include "sobolev/grid.hpp"

#include "sobolev/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace sobolev {

std::array<int, 2> GridSpec::multi_index(Eigen::Index k) const {
  if (dim == 1) return {static_cast<int>(k), 0};
  return {static_cast<int>(k / n_interior[1]), static_cast<int>(k % n_interior[1])};
}

std::array<double, 2> GridSpec::coordinate(Eigen::Index k) const {
  auto idx = multi_index(k);
  if (dim == 1) return {axis_coordinate(0, idx[0]), 0.0};
  return {axis_coordinate(0, idx[0]), axis_coordinate(1, idx[1])};
}

GridSpec build_grid(int dim, const std::vector<std::pair<double, double>>& bounds,
                    const std::vector<int>& n_interior) {
  if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2");
  if (static_cast<int>(bounds.size()) != dim) {
    throw ConfigError("need one bounds pair per axis");
  }
  std::vector<int> counts = n_interior;
  if (counts.size() == 1 && dim == 2) counts.push_back(counts[0]);
  if (static_cast<int>(counts.size()) != dim) {
    throw ConfigError("need one interior count per axis");
  }

  GridSpec g;
  g.dim = dim;
  g.size = 1;
  for (int a = 0; a < dim; ++a) {
    const auto [lo, hi] = bounds[a];
    if (counts[a] <= 0) throw ConfigError("n_interior must be positive");
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw ConfigError("degenerate bounds on axis " + std::to_string(a));
    }
    const double h = (hi - lo) / (counts[a] + 1);
    if (a == 0) {
      g.h = h;
    } else if (std::abs(h - g.h) > 1e-12 * g.h) {
      throw ConfigError("grid spacing differs between axes");
    }
    g.bounds[a] = bounds[a];
    g.n_interior[a] = counts[a];
    g.size *= counts[a];
  }
  if (dim == 1) {
    g.bounds[1] = {0.0, 0.0};
    g.n_interior[1] = 1;
  }
  return g;
}

SparseOperator assemble_laplacian(const GridSpec& grid) {
  const double inv_h2 = 1.0 / (grid.h * grid.h);
  const Eigen::Index n = grid.size;
  SparseOperator::Storage m(n, n);
  m.reserve(Eigen::VectorXi::Constant(n, 2 * grid.dim + 1));
  // Columns are inserted in increasing order within each row.
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto idx = grid.multi_index(k);
    if (grid.dim == 1) {
      if (idx[0] > 0) m.insert(k, k - 1) = -inv_h2;
      m.insert(k, k) = 2.0 * inv_h2;
      if (idx[0] + 1 < grid.n_interior[0]) m.insert(k, k + 1) = -inv_h2;
    } else {
      const Eigen::Index stride = grid.n_interior[1];
      if (idx[0] > 0) m.insert(k, k - stride) = -inv_h2;
      if (idx[1] > 0) m.insert(k, k - 1) = -inv_h2;
      m.insert(k, k) = 4.0 * inv_h2;
      if (idx[1] + 1 < grid.n_interior[1]) m.insert(k, k + 1) = -inv_h2;
      if (idx[0] + 1 < grid.n_interior[0]) m.insert(k, k + stride) = -inv_h2;
    }
  }
  return SparseOperator(std::move(m), true);
}

double accurate_dot(const VectorRef& a, const VectorRef& b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double sum = 0.0, comp = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double term = a[i] * b[i];
    const double t = sum + term;
    if (std::abs(sum) >= std::abs(term)) comp += (sum - t) + term;
    else comp += (term - t) + sum;
    sum = t;
  }
  return sum + comp;
}

double accurate_sum(const VectorRef& a) {
  double sum = 0.0, comp = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double t = sum + a[i];
    if (std::abs(sum) >= std::abs(a[i])) comp += (sum - t) + a[i];
    else comp += (a[i] - t) + sum;
    sum = t;
  }
  return sum + comp;
}

double l2h_inner(const VectorRef& u, const VectorRef& w, const GridSpec& grid) {
  if (u.size() != grid.size || w.size() != grid.size) {
    throw DimensionError("l2h_inner: grid function length differs from N");
  }
  return accurate_dot(u, w) * grid.cell_volume();
}

double l2h_norm(const VectorRef& u, const GridSpec& grid) {
  return std::sqrt(l2h_inner(u, u, grid));
}

Potential zero_potential(const GridSpec& grid) {
  return Potential{Vector::Zero(grid.size), PotentialKind::Zero, {}};
}

Potential single_well_potential(const GridSpec& grid) {
  Potential p{Vector(grid.size), PotentialKind::SingleWell, {}};
  for (Eigen::Index k = 0; k < grid.size; ++k) {
    const auto x = grid.coordinate(k);
    p.values[k] = 0.5 * (x[0] * x[0] + x[1] * x[1]);
  }
  return p;
}

Potential disordered_potential(const GridSpec& grid, const DisorderSpec& spec) {
  if (spec.cells <= 0) throw ConfigError("disorder cell count K must be positive");
  if (spec.high < 0.0) throw ConfigError("disorder values must be nonnegative");
  const int K = spec.cells;
  const std::size_t n_cells =
      grid.dim == 1 ? std::size_t(K) : std::size_t(K) * std::size_t(K);
  std::vector<double> cell_value(n_cells);
  Rng rng(spec.seed);
  for (auto& v : cell_value) v = rng.uniform() < 0.5 ? spec.high : spec.low_value();

  auto cell_of = [&](int axis, double x) {
    const auto [lo, hi] = grid.bounds[axis];
    const double width = (hi - lo) / K;
    int c = static_cast<int>(std::floor((x - lo) / width));
    return std::clamp(c, 0, K - 1);
  };

  Potential p{Vector(grid.size), PotentialKind::Disordered, spec};
  for (Eigen::Index k = 0; k < grid.size; ++k) {
    const auto x = grid.coordinate(k);
    std::size_t cell = static_cast<std::size_t>(cell_of(0, x[0]));
    if (grid.dim == 2) cell = cell * K + static_cast<std::size_t>(cell_of(1, x[1]));
    p.values[k] = cell_value[cell];
  }
  return p;
}

Potential custom_potential(const GridSpec& grid, Vector values) {
  if (values.size() != grid.size) throw DimensionError("potential length differs from N");
  if (!values.allFinite()) throw NumericError("potential has non-finite entries");
  if ((values.array() < 0.0).any()) throw ConfigError("potential must be nonnegative");
  return Potential{std::move(values), PotentialKind::Custom, {}};
}

Vector random_vector(Eigen::Index n, Rng& rng) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.symmetric();
  return v;
}

nlohmann::json grid_to_json(const GridSpec& grid) {
  nlohmann::json bounds = nlohmann::json::array();
  nlohmann::json counts = nlohmann::json::array();
  for (int a = 0; a < grid.dim; ++a) {
    bounds.push_back({grid.bounds[a].first, grid.bounds[a].second});
    counts.push_back(grid.n_interior[a]);
  }
  return {{"d", grid.dim}, {"bounds", bounds}, {"n_interior", counts}, {"h", grid.h}};
}

GridSpec grid_from_json(const nlohmann::json& j) {
  const int d = j.at("d").get<int>();
  std::vector<std::pair<double, double>> bounds;
  for (const auto& b : j.at("bounds")) {
    bounds.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
  }
  std::vector<int> counts;
  const auto& n = j.at("n_interior");
  if (n.is_number_integer()) counts.push_back(n.get<int>());
  else for (const auto& c : n) counts.push_back(c.get<int>());
  if (bounds.size() == 1 && d == 2) bounds.push_back(bounds[0]);
  return build_grid(d, bounds, counts);
}

nlohmann::json potential_to_json(const GridSpec& grid, const Potential& potential) {
  nlohmann::json j = grid_to_json(grid);
  j["values"] = std::vector<double>(potential.values.data(),
                                    potential.values.data() + potential.values.size());
  switch (potential.kind) {
    case PotentialKind::Zero: j["kind"] = "zero"; break;
    case PotentialKind::SingleWell: j["kind"] = "single-well"; break;
    case PotentialKind::Disordered:
      j["kind"] = "disordered";
      j["K"] = potential.disorder.cells;
      j["seed"] = potential.disorder.seed;
      break;
    case PotentialKind::Custom: j["kind"] = "custom"; break;
  }
  return j;
}

void write_grid_csv(std::ostream& os, const GridSpec& grid, const VectorRef& values) {
  if (values.size() != grid.size) throw DimensionError("csv: values length differs from N");
  os << "index,x,y,value\n";
  char buf[128];
  for (Eigen::Index k = 0; k < grid.size; ++k) {
    const auto x = grid.coordinate(k);
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g\n", static_cast<long>(k), x[0],
                  x[1], values[k]);
    os << buf;
  }
}

void write_grid_csv(const std::string& path, const GridSpec& grid, const VectorRef& values) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  write_grid_csv(out, grid, values);
}

Vector read_grid_csv(const std::string& path, const GridSpec& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::string line;
  std::getline(in, line);
  Vector v = Vector::Zero(grid.size);
  Eigen::Index count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 4) throw ConfigError("malformed state csv row: " + line);
    const long k = std::stol(fields[0]);
    if (k < 0 || k >= grid.size) throw DimensionError("state csv index out of range");
    v[k] = std::stod(fields[3]);
    ++count;
  }
  if (count != grid.size) throw DimensionError("state csv row count differs from N");
  return v;
}

}  // namespace sobolev

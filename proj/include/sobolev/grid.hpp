#pragma once

#include "sobolev/sparse_operator.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace sobolev {

/// Uniform rectangular grid of interior nodes with implicit zero Dirichlet
/// boundary. Node i along an axis sits at lower + (i + 1) * h.
struct GridSpec {
  int dim = 1;
  std::array<std::pair<double, double>, 2> bounds{};
  std::array<int, 2> n_interior{1, 1};
  double h = 0.0;
  Eigen::Index size = 0;  // N, total interior nodes

  /// h^d, the quadrature weight of one node.
  double cell_volume() const { return dim == 1 ? h : h * h; }

  /// Lexicographic index, axis 0 slowest.
  Eigen::Index index(int i0, int i1 = 0) const {
    return static_cast<Eigen::Index>(i0) * (dim == 2 ? n_interior[1] : 1) + i1;
  }
  std::array<int, 2> multi_index(Eigen::Index k) const;
  std::array<double, 2> coordinate(Eigen::Index k) const;
  double axis_coordinate(int axis, int i) const {
    return bounds[axis].first + (i + 1) * h;
  }
};

GridSpec build_grid(int dim, const std::vector<std::pair<double, double>>& bounds,
                    const std::vector<int>& n_interior);

/// -L_h, the (2d+1)-point Dirichlet Laplacian with the positive semidefinite
/// sign convention: diagonal 2d/h^2, axis neighbours -1/h^2.
SparseOperator assemble_laplacian(const GridSpec& grid);

/// Discrete L^2 inner product sum u(i) w(i) h^d (compensated summation).
double l2h_inner(const VectorRef& u, const VectorRef& w, const GridSpec& grid);
double l2h_norm(const VectorRef& u, const GridSpec& grid);

/// Neumaier-compensated dot product; deterministic and order-fixed.
double accurate_dot(const VectorRef& a, const VectorRef& b);
double accurate_sum(const VectorRef& a);

enum class PotentialKind { Zero, SingleWell, Disordered, Custom };

struct DisorderSpec {
  int cells = 100;  // K per axis
  std::uint64_t seed = 0;
  double high = 1.0;
  /// Defaults to 1/K^2 when left negative.
  double low = -1.0;

  double low_value() const { return low >= 0.0 ? low : 1.0 / (double(cells) * cells); }
};

struct Potential {
  Vector values;
  PotentialKind kind = PotentialKind::Custom;
  DisorderSpec disorder{};  // meaningful only for Disordered
};

Potential zero_potential(const GridSpec& grid);
/// V(x) = |x|^2 / 2 at the interior nodes.
Potential single_well_potential(const GridSpec& grid);
/// Piecewise constant on a K^d cell partition of the domain; each cell draws
/// `high` or `low` with probability 1/2. Node -> cell is
/// floor((x - lower) / width), clamped to K - 1.
Potential disordered_potential(const GridSpec& grid, const DisorderSpec& spec);
Potential custom_potential(const GridSpec& grid, Vector values);

/// Deterministic RNG used everywhere a seed appears. std::mt19937_64 output is
/// fixed by the standard, and doubles are built from its top 53 bits rather
/// than through <random> distributions, whose output varies between
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform in [-1, 1).
  double symmetric() { return 2.0 * uniform() - 1.0; }

 private:
  std::mt19937_64 engine_;
};

Vector random_vector(Eigen::Index n, Rng& rng);

nlohmann::json grid_to_json(const GridSpec& grid);
GridSpec grid_from_json(const nlohmann::json& j);
nlohmann::json potential_to_json(const GridSpec& grid, const Potential& potential);

/// CSV with header "index,x,y,value"; y is 0 on 1D grids.
void write_grid_csv(std::ostream& os, const GridSpec& grid, const VectorRef& values);
void write_grid_csv(const std::string& path, const GridSpec& grid, const VectorRef& values);
Vector read_grid_csv(const std::string& path, const GridSpec& grid);

}  // namespace sobolev

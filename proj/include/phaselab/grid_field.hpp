#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "phaselab/potentials.hpp"

namespace phaselab {

/// Uniform rectangular grid in 1-3 dimensions. Node (i0, i1, i2) sits at
/// origin + h * (i0, i1, i2); indices are row-major with the last axis fastest.
struct Grid {
  int n = 1;
  std::array<int, 3> shape{3, 1, 1};
  double h = 1.0;
  std::array<double, 3> origin{0.0, 0.0, 0.0};

  static Grid make(int n, std::array<int, 3> shape, double h, std::array<double, 3> origin);
  /// Grid whose node cloud is symmetric about the origin on every axis.
  static Grid centered(int n, std::array<int, 3> shape, double h);

  void validate() const;
  std::size_t size() const {
    return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
  }
  std::size_t stride(int axis) const {
    return axis == 0 ? static_cast<std::size_t>(shape[1]) * shape[2]
                     : axis == 1 ? static_cast<std::size_t>(shape[2]) : 1;
  }
  std::size_t index(int i0, int i1 = 0, int i2 = 0) const {
    return (static_cast<std::size_t>(i0) * shape[1] + i1) * shape[2] + i2;
  }
  std::array<int, 3> unravel(std::size_t idx) const {
    std::array<int, 3> c{0, 0, 0};
    c[2] = static_cast<int>(idx % shape[2]);
    idx /= shape[2];
    c[1] = static_cast<int>(idx % shape[1]);
    c[0] = static_cast<int>(idx / shape[1]);
    return c;
  }
  std::array<double, 3> coord(std::size_t idx) const {
    const auto c = unravel(idx);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < n; ++a) x[a] = origin[a] + h * c[a];
    return x;
  }
  double cell_volume() const;
  bool operator==(const Grid&) const = default;
};

enum class NodeTag : std::uint8_t { Interior = 0, Dirichlet = 1, Exterior = 2 };

/// m-vector field on a grid. Dirichlet nodes hold their boundary values in
/// `values` and are never updated by solvers; exterior nodes are ignored.
class Field {
 public:
  Field() = default;
  /// All nodes interior except the outermost layer, which is Dirichlet.
  Field(Grid grid, int m);

  /// Masked disk/ball: interior strictly inside `radius`, a Dirichlet ring of
  /// the nodes adjacent to it, exterior elsewhere.
  static Field ball(Grid grid, int m, std::array<double, 3> center, double radius);

  const Grid& grid() const { return grid_; }
  int m() const { return m_; }
  std::size_t size() const { return grid_.size(); }

  std::span<double> at(std::size_t node) { return {values_.data() + node * m_, static_cast<std::size_t>(m_)}; }
  std::span<const double> at(std::size_t node) const {
    return {values_.data() + node * m_, static_cast<std::size_t>(m_)};
  }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<NodeTag>& mask() { return mask_; }
  const std::vector<NodeTag>& mask() const { return mask_; }
  NodeTag tag(std::size_t node) const { return mask_[node]; }
  bool active(std::size_t node) const { return mask_[node] != NodeTag::Exterior; }

  void fill(std::span<const double> value);
  /// Sets every non-exterior node from f(x, out).
  void assign(const std::function<void(const std::array<double, 3>&, std::span<double>)>& f);
  /// Sets only Dirichlet nodes from f(x, out).
  void assign_boundary(const std::function<void(const std::array<double, 3>&, std::span<double>)>& f);

  /// Throws std::invalid_argument when the mask breaks the stencil invariants
  /// or a non-exterior value is not finite.
  void validate() const;

  bool operator==(const Field&) const = default;

 private:
  Grid grid_;
  int m_ = 1;
  std::vector<double> values_;
  std::vector<NodeTag> mask_;
};

/// Node subset used for integrals and measures. Always a subset of the
/// non-exterior nodes of the field it was built from.
class RegionMask {
 public:
  RegionMask() = default;
  RegionMask(std::vector<std::uint8_t> include, double cell_layer_bound)
      : include_(std::move(include)), cell_layer_bound_(cell_layer_bound) {}

  /// Closed ball |x - center| <= radius (node-center rule).
  static RegionMask ball(const Field& f, std::array<double, 3> center, double radius);
  /// r_in < |x - center| <= r_out.
  static RegionMask shell(const Field& f, std::array<double, 3> center, double r_in, double r_out);
  /// R x B_radius(y0): axis 0 is the free s-axis, y = remaining axes.
  static RegionMask cylinder(const Field& f, std::array<double, 3> y0, double radius);
  static RegionMask all(const Field& f);

  bool contains(std::size_t node) const { return include_[node] != 0; }
  std::size_t count() const;
  const std::vector<std::uint8_t>& include() const { return include_; }
  /// Volume of the layer of nodes whose membership is decided by the
  /// node-center rule; the error of any region measure is below this.
  double cell_layer_bound() const { return cell_layer_bound_; }

 private:
  std::vector<std::uint8_t> include_;
  double cell_layer_bound_ = 0.0;
};

/// Surface measure of the unit sphere in R^n (2, 2 pi, 4 pi).
double unit_sphere_area(int n);
/// Lebesgue measure of the unit ball in R^n.
double unit_ball_volume(int n);

/// Second-order central-difference Laplacian on interior nodes, zero elsewhere.
Field laplacian(const Field& f);

struct EnergyParts {
  double kinetic = 0.0;    // int 1/2 |grad u|^2 (without the eps^2 factor)
  double potential = 0.0;  // int W(u)
  double total = 0.0;      // eps^2 * kinetic + potential
};

/// Cell quadrature of (eps^2/2)|grad u|^2 + W(u) over cells whose 2^n corners
/// all lie in `region`. Per cell, each axis contributes the mean squared
/// forward difference over its parallel edges and the potential is the mean of
/// the corner values. The nodal gradient flow is the exact gradient of this sum.
EnergyParts energy_parts(const Field& f, const RegionMask& region, const PotentialSpec& spec,
                         double eps = 1.0);
double energy(const Field& f, const RegionMask& region, const PotentialSpec& spec, double eps = 1.0);
double kinetic_energy(const Field& f, const RegionMask& region);

/// Cell quadrature of an edge quantity: over cells in `region`, h^n times the
/// sum over axes of the mean of edge(i, j) / h^2 on the parallel edges i -> j.
/// With edge = |u_j - u_i|^2 this is int |grad u|^2.
double edge_integral(const Field& f, const RegionMask& region,
                     const std::function<double(std::size_t, std::size_t)>& edge);
/// Cell quadrature of a nodal quantity (mean of the corner values).
double node_integral(const Field& f, const RegionMask& region,
                     const std::function<double(std::size_t)>& value);

struct Residual {
  double max = 0.0;
  std::size_t argmax = 0;
  std::size_t skipped = 0;  // alpha < 2 nodes pinned within q_min of a well
};

/// max over interior nodes of |eps^2 Lap u - W_u(u)|.
Residual residual(const Field& f, const PotentialSpec& spec, double eps = 1.0);

struct Measure {
  std::size_t count = 0;
  double cell_volume = 0.0;
  double value = 0.0;
  double cell_layer_bound = 0.0;
};

/// |B ∩ {|u - a| > lambda}| as node count times cell volume.
Measure measure_superlevel(const Field& f, std::span<const double> well, double lambda,
                           const RegionMask& region);
/// |B ∩ {|u - a| <= lambda}|, the complement of measure_superlevel in `region`.
Measure measure_sublevel(const Field& f, std::span<const double> well, double lambda,
                         const RegionMask& region);
/// Nodal quadrature of W(u) over region ∩ {|u - a| <= lambda}.
double sublevel_potential_integral(const Field& f, std::span<const double> well, double lambda,
                                   const RegionMask& region, const PotentialSpec& spec);

/// Resamples x -> u(center + factor * x) onto `target` by multilinear
/// interpolation. The result has the default box mask of `target`.
/// Throws OutOfDomain when a sample leaves the active part of the source.
Field rescale(const Field& f, std::array<double, 3> center, double factor, const Grid& target);

/// Multilinear interpolation of f at x. Throws OutOfDomain.
void interpolate(const Field& f, const std::array<double, 3>& x, std::span<double> out);

/// Euclidean distance from every node to the nearest node selected by
/// `is_boundary`; infinity where no boundary node exists.
std::vector<double> distance_to(const Field& f, const std::function<bool(std::size_t)>& is_boundary);

/// Max over nodes in `region` of |u - a|.
double sup_deviation(const Field& f, std::span<const double> well, const RegionMask& region);

}  // namespace phaselab

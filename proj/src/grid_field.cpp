#include "phaselab/grid_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "phaselab/error.hpp"
#include "phaselab/parallel.hpp"

namespace phaselab {

Grid Grid::make(int n, std::array<int, 3> shape, double h, std::array<double, 3> origin) {
  Grid g;
  g.n = n;
  g.shape = shape;
  for (int a = n; a < 3; ++a) {
    g.shape[a] = 1;
    origin[a] = 0.0;
  }
  g.h = h;
  g.origin = origin;
  g.validate();
  return g;
}

Grid Grid::centered(int n, std::array<int, 3> shape, double h) {
  std::array<double, 3> origin{0.0, 0.0, 0.0};
  for (int a = 0; a < n; ++a) origin[a] = -0.5 * h * (shape[a] - 1);
  return make(n, shape, h, origin);
}

void Grid::validate() const {
  if (n < 1 || n > 3) throw std::invalid_argument("grid: dimension must be 1, 2 or 3");
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("grid: spacing must be positive");
  for (int a = 0; a < 3; ++a) {
    if (a < n && shape[a] < 3) throw std::invalid_argument("grid: at least 3 nodes per axis");
    if (a >= n && shape[a] != 1) throw std::invalid_argument("grid: unused axes must have shape 1");
    if (!std::isfinite(origin[a])) throw std::invalid_argument("grid: origin must be finite");
  }
}

double Grid::cell_volume() const { return std::pow(h, n); }

namespace {

bool on_edge(const Grid& g, const std::array<int, 3>& c) {
  for (int a = 0; a < g.n; ++a)
    if (c[a] == 0 || c[a] == g.shape[a] - 1) return true;
  return false;
}

double dist(const std::array<double, 3>& x, const std::array<double, 3>& y, int n) {
  double s = 0.0;
  for (int a = 0; a < n; ++a) s += (x[a] - y[a]) * (x[a] - y[a]);
  return std::sqrt(s);
}

double deviation(std::span<const double> u, std::span<const double> a) {
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += (u[k] - a[k]) * (u[k] - a[k]);
  return std::sqrt(s);
}

void check_well(const Field& f, std::span<const double> well) {
  if (well.size() != static_cast<std::size_t>(f.m()))
    throw std::invalid_argument("well dimension does not match field components");
}

// Visits the 3^n - 1 neighbours (Chebyshev distance 1) of node c.
template <class F>
void for_each_box_neighbour(const Grid& g, const std::array<int, 3>& c, F&& fn) {
  const int r0 = 1, r1 = g.n > 1 ? 1 : 0, r2 = g.n > 2 ? 1 : 0;
  for (int d0 = -r0; d0 <= r0; ++d0)
    for (int d1 = -r1; d1 <= r1; ++d1)
      for (int d2 = -r2; d2 <= r2; ++d2) {
        if (d0 == 0 && d1 == 0 && d2 == 0) continue;
        const std::array<int, 3> q{c[0] + d0, c[1] + d1, c[2] + d2};
        bool inside = true;
        for (int a = 0; a < 3; ++a) inside = inside && q[a] >= 0 && q[a] < g.shape[a];
        if (inside) fn(g.index(q[0], q[1], q[2]));
      }
}

}  // namespace

Field::Field(Grid grid, int m) : grid_(grid), m_(m) {
  grid_.validate();
  if (m < 1 || m > kMaxComponents) throw std::invalid_argument("field: components must be in 1..4");
  values_.assign(grid_.size() * m_, 0.0);
  mask_.assign(grid_.size(), NodeTag::Interior);
  for (std::size_t i = 0; i < grid_.size(); ++i)
    if (on_edge(grid_, grid_.unravel(i))) mask_[i] = NodeTag::Dirichlet;
}

Field Field::ball(Grid grid, int m, std::array<double, 3> center, double radius) {
  Field f(grid, m);
  const Grid& g = f.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const bool in = dist(g.coord(i), center, g.n) < radius && !on_edge(g, g.unravel(i));
    f.mask_[i] = in ? NodeTag::Interior : NodeTag::Exterior;
  }
  // Every cell touching an interior node must have active corners so that the
  // cell energy sees the full stencil.
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (f.mask_[i] != NodeTag::Interior) continue;
    for_each_box_neighbour(g, g.unravel(i), [&](std::size_t j) {
      if (f.mask_[j] == NodeTag::Exterior) f.mask_[j] = NodeTag::Dirichlet;
    });
  }
  return f;
}

void Field::fill(std::span<const double> value) {
  if (value.size() != static_cast<std::size_t>(m_)) throw std::invalid_argument("field: fill size");
  for (std::size_t i = 0; i < size(); ++i) std::copy(value.begin(), value.end(), at(i).begin());
}

void Field::assign(const std::function<void(const std::array<double, 3>&, std::span<double>)>& f) {
  for (std::size_t i = 0; i < size(); ++i)
    if (active(i)) f(grid_.coord(i), at(i));
}

void Field::assign_boundary(
    const std::function<void(const std::array<double, 3>&, std::span<double>)>& f) {
  for (std::size_t i = 0; i < size(); ++i)
    if (mask_[i] == NodeTag::Dirichlet) f(grid_.coord(i), at(i));
}

void Field::validate() const {
  grid_.validate();
  if (values_.size() != grid_.size() * m_ || mask_.size() != grid_.size())
    throw std::invalid_argument("field: storage does not match grid");
  for (std::size_t i = 0; i < size(); ++i) {
    if (mask_[i] == NodeTag::Exterior) continue;
    for (double v : at(i))
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "field: non-finite value at node " << i;
        throw std::invalid_argument(os.str());
      }
    if (mask_[i] != NodeTag::Interior) continue;
    const auto c = grid_.unravel(i);
    if (on_edge(grid_, c)) throw std::invalid_argument("field: interior node on the grid edge");
    for (int a = 0; a < grid_.n; ++a) {
      const std::size_t s = grid_.stride(a);
      if (mask_[i - s] == NodeTag::Exterior || mask_[i + s] == NodeTag::Exterior)
        throw std::invalid_argument("field: interior node next to an exterior node");
    }
  }
}

double unit_sphere_area(int n) {
  switch (n) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
    default: throw std::invalid_argument("unit_sphere_area: n must be 1..3");
  }
}

double unit_ball_volume(int n) { return unit_sphere_area(n) / n; }

RegionMask RegionMask::ball(const Field& f, std::array<double, 3> center, double radius) {
  const Grid& g = f.grid();
  std::vector<std::uint8_t> inc(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i)
    inc[i] = f.active(i) && dist(g.coord(i), center, g.n) <= radius;
  const double layer = unit_sphere_area(g.n) * std::pow(radius, g.n - 1) * std::sqrt(g.n) * g.h;
  return {std::move(inc), layer};
}

RegionMask RegionMask::shell(const Field& f, std::array<double, 3> center, double r_in,
                             double r_out) {
  const Grid& g = f.grid();
  std::vector<std::uint8_t> inc(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = dist(g.coord(i), center, g.n);
    inc[i] = f.active(i) && r > r_in && r <= r_out;
  }
  const double layer = unit_sphere_area(g.n) *
                       (std::pow(r_out, g.n - 1) + (r_in > 0 ? std::pow(r_in, g.n - 1) : 0.0)) *
                       std::sqrt(g.n) * g.h;
  return {std::move(inc), layer};
}

RegionMask RegionMask::cylinder(const Field& f, std::array<double, 3> y0, double radius) {
  const Grid& g = f.grid();
  if (g.n < 2) throw std::invalid_argument("cylinder region needs n >= 2");
  std::vector<std::uint8_t> inc(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = g.coord(i);
    double s = 0.0;
    for (int a = 1; a < g.n; ++a) s += (x[a] - y0[a]) * (x[a] - y0[a]);
    inc[i] = f.active(i) && std::sqrt(s) <= radius;
  }
  const double length = g.h * (g.shape[0] - 1);
  const double layer = unit_sphere_area(g.n - 1) * std::pow(radius, g.n - 2) * length *
                       std::sqrt(g.n) * g.h;
  return {std::move(inc), layer};
}

RegionMask RegionMask::all(const Field& f) {
  std::vector<std::uint8_t> inc(f.size(), 0);
  for (std::size_t i = 0; i < f.size(); ++i) inc[i] = f.active(i);
  return {std::move(inc), 0.0};
}

std::size_t RegionMask::count() const {
  return static_cast<std::size_t>(std::count(include_.begin(), include_.end(), 1));
}

Field laplacian(const Field& f) {
  Field out = f;
  const Grid& g = f.grid();
  const int m = f.m();
  const double inv_h2 = 1.0 / (g.h * g.h);
  parallel_for(f.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      auto o = out.at(i);
      std::fill(o.begin(), o.end(), 0.0);
      if (f.tag(i) != NodeTag::Interior) continue;
      const double* u = f.values().data();
      for (int a = 0; a < g.n; ++a) {
        const std::size_t s = g.stride(a);
        for (int k = 0; k < m; ++k)
          o[k] += (u[(i + s) * m + k] - 2.0 * u[i * m + k] + u[(i - s) * m + k]) * inv_h2;
      }
    }
  });
  return out;
}

EnergyParts energy_parts(const Field& f, const RegionMask& region, const PotentialSpec& spec,
                         double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("energy: eps must be positive");
  if (spec.m != f.m()) throw std::invalid_argument("energy: potential and field dimensions differ");
  const Grid& g = f.grid();
  const int n = g.n, m = f.m();
  const std::size_t N = f.size();
  const double inv_h2 = 1.0 / (g.h * g.h);

  std::vector<double> w(N, 0.0);
  std::vector<double> edge(static_cast<std::size_t>(n) * N, 0.0);
  parallel_for(N, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      if (!region.contains(i)) continue;
      w[i] = eval_w(spec, f.at(i));
      const auto c = g.unravel(i);
      for (int a = 0; a < n; ++a) {
        if (c[a] + 1 >= g.shape[a]) continue;
        const std::size_t j = i + g.stride(a);
        if (!region.contains(j)) continue;
        double s = 0.0;
        for (int k = 0; k < m; ++k) {
          const double d = f.values()[j * m + k] - f.values()[i * m + k];
          s += d * d;
        }
        edge[a * N + i] = s * inv_h2;
      }
    }
  });

  const int corners = 1 << n;
  std::array<std::size_t, 8> offset{};
  for (int b = 0; b < corners; ++b) {
    std::size_t o = 0;
    for (int a = 0; a < n; ++a)
      if (b & (1 << a)) o += g.stride(a);
    offset[b] = o;
  }
  const double vol = g.cell_volume();
  const double edge_weight = 0.5 / (corners / 2);
  const double corner_weight = 1.0 / corners;

  auto cell_pass = [&](bool kinetic) {
    return chunked_sum(N, [&](std::size_t b, std::size_t e) {
      double acc = 0.0;
      for (std::size_t i = b; i < e; ++i) {
        const auto c = g.unravel(i);
        bool ok = true;
        for (int a = 0; a < n && ok; ++a) ok = c[a] + 1 < g.shape[a];
        for (int k = 0; k < corners && ok; ++k) ok = region.contains(i + offset[k]);
        if (!ok) continue;
        double cell = 0.0;
        if (kinetic) {
          for (int a = 0; a < n; ++a)
            for (int k = 0; k < corners; ++k)
              if (!(k & (1 << a))) cell += edge[a * N + i + offset[k]];
          cell *= edge_weight;
        } else {
          for (int k = 0; k < corners; ++k) cell += w[i + offset[k]];
          cell *= corner_weight;
        }
        acc += cell * vol;
      }
      return acc;
    });
  };
  EnergyParts p;
  p.kinetic = cell_pass(true);
  p.potential = cell_pass(false);
  p.total = eps * eps * p.kinetic + p.potential;
  return p;
}

double energy(const Field& f, const RegionMask& region, const PotentialSpec& spec, double eps) {
  return energy_parts(f, region, spec, eps).total;
}

double kinetic_energy(const Field& f, const RegionMask& region) {
  const auto any = PotentialSpec::product({std::vector<double>(f.m(), 0.0)});
  return energy_parts(f, region, any, 1.0).kinetic;
}

namespace {

template <class CellFn>
double cell_sum(const Field& f, const RegionMask& region, CellFn&& cell) {
  const Grid& g = f.grid();
  const int n = g.n, corners = 1 << n;
  std::array<std::size_t, 8> offset{};
  for (int b = 0; b < corners; ++b)
    for (int a = 0; a < n; ++a)
      if (b & (1 << a)) offset[b] += g.stride(a);
  return chunked_sum(f.size(), [&](std::size_t b, std::size_t e) {
    double acc = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      const auto c = g.unravel(i);
      bool ok = true;
      for (int a = 0; a < n && ok; ++a) ok = c[a] + 1 < g.shape[a];
      for (int k = 0; k < corners && ok; ++k) ok = region.contains(i + offset[k]);
      if (ok) acc += cell(i, offset);
    }
    return acc * g.cell_volume();
  });
}

}  // namespace

double edge_integral(const Field& f, const RegionMask& region,
                     const std::function<double(std::size_t, std::size_t)>& edge) {
  const Grid& g = f.grid();
  const int n = g.n, corners = 1 << n;
  const double w = 1.0 / ((corners / 2) * g.h * g.h);
  return cell_sum(f, region, [&](std::size_t i, const std::array<std::size_t, 8>& off) {
    double s = 0.0;
    for (int a = 0; a < n; ++a)
      for (int k = 0; k < corners; ++k)
        if (!(k & (1 << a))) s += edge(i + off[k], i + off[k] + g.stride(a));
    return s * w;
  });
}

double node_integral(const Field& f, const RegionMask& region,
                     const std::function<double(std::size_t)>& value) {
  const int corners = 1 << f.grid().n;
  return cell_sum(f, region, [&](std::size_t i, const std::array<std::size_t, 8>& off) {
    double s = 0.0;
    for (int k = 0; k < corners; ++k) s += value(i + off[k]);
    return s / corners;
  });
}

Residual residual(const Field& f, const PotentialSpec& spec, double eps) {
  const Field lap = laplacian(f);
  const int m = f.m();
  Residual r;
  std::vector<double> grad(m);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.tag(i) != NodeTag::Interior) continue;
    if (spec.alpha < 2.0 && nearest_well(spec, f.at(i)).second < spec.q_min) {
      ++r.skipped;
      continue;
    }
    eval_w_grad(spec, f.at(i), grad);
    double s = 0.0;
    for (int k = 0; k < m; ++k) {
      const double d = eps * eps * lap.at(i)[k] - grad[k];
      s += d * d;
    }
    s = std::sqrt(s);
    if (s > r.max) {
      r.max = s;
      r.argmax = i;
    }
  }
  return r;
}

Measure measure_superlevel(const Field& f, std::span<const double> well, double lambda,
                           const RegionMask& region) {
  if (!(lambda > 0.0)) throw std::invalid_argument("measure: lambda must be positive");
  check_well(f, well);
  Measure out;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (region.contains(i) && deviation(f.at(i), well) > lambda) ++out.count;
  out.cell_volume = f.grid().cell_volume();
  out.value = static_cast<double>(out.count) * out.cell_volume;
  out.cell_layer_bound = region.cell_layer_bound();
  return out;
}

Measure measure_sublevel(const Field& f, std::span<const double> well, double lambda,
                         const RegionMask& region) {
  Measure sup = measure_superlevel(f, well, lambda, region);
  Measure out = sup;
  out.count = region.count() - sup.count;
  out.value = static_cast<double>(out.count) * out.cell_volume;
  return out;
}

double sublevel_potential_integral(const Field& f, std::span<const double> well, double lambda,
                                   const RegionMask& region, const PotentialSpec& spec) {
  if (!(lambda > 0.0)) throw std::invalid_argument("measure: lambda must be positive");
  check_well(f, well);
  const double vol = f.grid().cell_volume();
  return chunked_sum(f.size(), [&](std::size_t b, std::size_t e) {
    double acc = 0.0;
    for (std::size_t i = b; i < e; ++i)
      if (region.contains(i) && deviation(f.at(i), well) <= lambda) acc += eval_w(spec, f.at(i));
    return acc * vol;
  });
}

void interpolate(const Field& f, const std::array<double, 3>& x, std::span<double> out) {
  const Grid& g = f.grid();
  std::array<int, 3> base{0, 0, 0};
  std::array<double, 3> frac{0.0, 0.0, 0.0};
  constexpr double slack = 1e-9;
  for (int a = 0; a < g.n; ++a) {
    double t = (x[a] - g.origin[a]) / g.h;
    if (t < -slack || t > g.shape[a] - 1 + slack) {
      std::ostringstream os;
      os << "sample at coordinate " << x[a] << " on axis " << a << " leaves the source grid";
      throw OutOfDomain(os.str());
    }
    // Samples that hit a node up to rounding reproduce the node value exactly.
    if (std::abs(t - std::round(t)) < slack) t = std::round(t);
    t = std::clamp(t, 0.0, static_cast<double>(g.shape[a] - 1));
    base[a] = std::min(static_cast<int>(std::floor(t)), g.shape[a] - 2);
    frac[a] = t - base[a];
  }
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t i0 = g.index(base[0], base[1], base[2]);
  for (int b = 0; b < (1 << g.n); ++b) {
    double wgt = 1.0;
    std::size_t idx = i0;
    for (int a = 0; a < g.n; ++a) {
      const bool hi = b & (1 << a);
      wgt *= hi ? frac[a] : 1.0 - frac[a];
      if (hi) idx += g.stride(a);
    }
    if (wgt == 0.0) continue;
    if (!f.active(idx)) throw OutOfDomain("sample touches an exterior node of the source");
    const auto u = f.at(idx);
    for (int k = 0; k < f.m(); ++k) out[k] += wgt * u[k];
  }
}

Field rescale(const Field& f, std::array<double, 3> center, double factor, const Grid& target) {
  if (!(factor > 0.0)) throw std::invalid_argument("rescale: factor must be positive");
  if (target.n != f.grid().n) throw std::invalid_argument("rescale: dimension mismatch");
  Field out(target, f.m());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto x = target.coord(i);
    std::array<double, 3> p{0.0, 0.0, 0.0};
    for (int a = 0; a < target.n; ++a) p[a] = center[a] + factor * x[a];
    interpolate(f, p, out.at(i));
  }
  return out;
}

std::vector<double> distance_to(const Field& f,
                                const std::function<bool(std::size_t)>& is_boundary) {
  const Grid& g = f.grid();
  std::vector<std::array<double, 3>> pts;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (is_boundary(i)) pts.push_back(g.coord(i));
  std::vector<double> d(f.size(), std::numeric_limits<double>::infinity());
  parallel_for(f.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto x = g.coord(i);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& p : pts) {
        double s = 0.0;
        for (int a = 0; a < g.n; ++a) s += (x[a] - p[a]) * (x[a] - p[a]);
        best = std::min(best, s);
      }
      d[i] = std::sqrt(best);
    }
  });
  return d;
}

double sup_deviation(const Field& f, std::span<const double> well, const RegionMask& region) {
  check_well(f, well);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (region.contains(i)) s = std::max(s, deviation(f.at(i), well));
  return s;
}

}  // namespace phaselab

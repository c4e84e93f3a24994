#include "phaselab/potentials.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "phaselab/error.hpp"
#include "phaselab/rng.hpp"

namespace phaselab {
namespace {

double dist2(std::span<const double> u, const std::vector<double>& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = u[i] - a[i];
    s += d * d;
  }
  return s;
}

std::string format_point(std::span<const double> u) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (std::size_t i = 0; i < u.size(); ++i) os << (i ? ", " : "") << u[i];
  os << ")";
  return os.str();
}

// Well factor |u - a|^alpha.
double well_factor(double d2, double alpha) {
  return alpha == 2.0 ? d2 : std::pow(d2, 0.5 * alpha);
}

// Index of the well mapped onto well j by the reflection, or j itself for
// wells on {u_1 = 0}; -1 when the reflected point is not a well. Evaluating
// the product pairwise makes W(u^) == W(u) bit-for-bit.
int reflection_partner(const PotentialSpec& spec, int j) {
  const auto& a = spec.wells[j];
  if (a[0] == 0.0) return j;
  for (int k = 0; k < static_cast<int>(spec.wells.size()); ++k) {
    const auto& b = spec.wells[k];
    bool match = b[0] == -a[0];
    for (int i = 1; i < spec.m && match; ++i) match = b[i] == a[i];
    if (match) return k;
  }
  return -1;
}

double bumps_value(const PotentialSpec& spec, std::span<const double> u) {
  double s = 0.0;
  for (const auto& b : spec.bumps) s += b.amplitude * std::exp(-dist2(u, b.center) / (b.width * b.width));
  return s;
}

}  // namespace

PotentialSpec PotentialSpec::two_well() {
  PotentialSpec s = product({{-1.0}, {1.0}}, 0.25);
  return s;
}

PotentialSpec PotentialSpec::product(std::vector<std::vector<double>> wells, double scale) {
  PotentialSpec s;
  s.m = wells.empty() ? 1 : static_cast<int>(wells.front().size());
  s.wells = std::move(wells);
  s.alpha = 2.0;
  s.form = PotentialForm::ProductQuartic;
  s.scale = scale;
  s.symmetric = s.wells_reflection_invariant();
  s.validate();
  return s;
}

PotentialSpec PotentialSpec::power(std::vector<std::vector<double>> wells, double alpha,
                                   double scale) {
  PotentialSpec s = product(std::move(wells), scale);
  s.alpha = alpha;
  s.form = alpha == 2.0 ? PotentialForm::ProductQuartic : PotentialForm::PowerProduct;
  s.validate();
  return s;
}

PotentialSpec PotentialSpec::ring(double anisotropy, double scale) {
  PotentialSpec s;
  s.m = 2;
  s.wells = {{-1.0, 0.0}, {1.0, 0.0}};
  s.form = PotentialForm::Ring;
  s.anisotropy = anisotropy;
  s.scale = scale;
  s.symmetric = true;
  s.validate();
  return s;
}

bool PotentialSpec::wells_reflection_invariant() const {
  for (const auto& a : wells) {
    bool found = false;
    for (const auto& b : wells) {
      bool match = b[0] == -a[0];
      for (int i = 1; i < m && match; ++i) match = b[i] == a[i];
      found = found || match;
    }
    if (!found) return false;
  }
  return true;
}

std::string PotentialSpec::form_name() const {
  switch (form) {
    case PotentialForm::ProductQuartic: return "product-quartic";
    case PotentialForm::PowerProduct: return "power-product";
    case PotentialForm::Ring: return "ring";
  }
  return "unknown";
}

void PotentialSpec::validate() const {
  if (m < 1 || m > kMaxComponents) throw std::invalid_argument("potential: m must be in [1, 4]");
  if (wells.empty() || wells.size() > 16)
    throw std::invalid_argument("potential: between 1 and 16 wells required");
  for (const auto& a : wells) {
    if (static_cast<int>(a.size()) != m) throw std::invalid_argument("potential: well dimension != m");
  }
  if (!(alpha > 0.0 && alpha <= 2.0)) throw std::invalid_argument("potential: alpha must be in (0, 2]");
  if (form == PotentialForm::ProductQuartic && alpha != 2.0)
    throw std::invalid_argument("potential: product-quartic form requires alpha = 2");
  if (form == PotentialForm::Ring) {
    if (m != 2 || alpha != 2.0) throw std::invalid_argument("potential: ring form requires m = 2, alpha = 2");
    if (!(anisotropy > 0.0)) throw std::invalid_argument("potential: ring anisotropy must be > 0");
  }
  if (!(scale > 0.0)) throw std::invalid_argument("potential: scale must be > 0");
  for (const auto& b : bumps) {
    if (static_cast<int>(b.center.size()) != m || !(b.width > 0.0))
      throw std::invalid_argument("potential: malformed bump");
  }
  if (symmetric && !wells_reflection_invariant())
    throw std::invalid_argument("potential: symmetric flag set but wells are not reflection invariant");
}

double eval_w(const PotentialSpec& spec, std::span<const double> u) {
  double w = 0.0;
  if (spec.form == PotentialForm::Ring) {
    const double r2 = u[0] * u[0] + u[1] * u[1];
    const double t = r2 - 1.0;
    w = spec.scale * (0.25 * t * t + spec.anisotropy * u[1] * u[1]);
  } else if (spec.symmetric) {
    double prod = 1.0;
    const int n = static_cast<int>(spec.wells.size());
    for (int j = 0; j < n; ++j) {
      const int k = reflection_partner(spec, j);
      if (k >= 0 && k < j) continue;
      double f = well_factor(dist2(u, spec.wells[j]), spec.alpha);
      if (k > j) f *= well_factor(dist2(u, spec.wells[k]), spec.alpha);
      prod *= f;
    }
    w = spec.scale * prod;
  } else {
    double prod = 1.0;
    for (const auto& a : spec.wells) prod *= well_factor(dist2(u, a), spec.alpha);
    w = spec.scale * prod;
  }
  if (!spec.bumps.empty()) w += bumps_value(spec, u);
  return w;
}

void eval_w_grad(const PotentialSpec& spec, std::span<const double> u, std::span<double> out) {
  const int m = spec.m;
  std::fill(out.begin(), out.begin() + m, 0.0);
  if (spec.form == PotentialForm::Ring) {
    const double r2 = u[0] * u[0] + u[1] * u[1];
    out[0] = spec.scale * (r2 - 1.0) * u[0];
    out[1] = spec.scale * ((r2 - 1.0) * u[1] + 2.0 * spec.anisotropy * u[1]);
  } else {
    const int n = static_cast<int>(spec.wells.size());
    double f[16];
    double d2[16];
    for (int j = 0; j < n; ++j) {
      d2[j] = dist2(u, spec.wells[j]);
      if (spec.alpha < 2.0 && d2[j] < spec.q_min * spec.q_min) {
        throw DegenerateGradient("W_u undefined within q_min of well " + std::to_string(j) +
                                 " at u = " + format_point(u.first(m)));
      }
      f[j] = well_factor(d2[j], spec.alpha);
    }
    for (int j = 0; j < n; ++j) {
      double others = 1.0;
      for (int k = 0; k < n; ++k)
        if (k != j) others *= f[k];
      // d/du |u-a|^alpha = alpha |u-a|^(alpha-2) (u-a)
      const double coef = spec.scale * others *
                          (spec.alpha == 2.0 ? 2.0 : spec.alpha * std::pow(d2[j], 0.5 * spec.alpha - 1.0));
      for (int i = 0; i < m; ++i) out[i] += coef * (u[i] - spec.wells[j][i]);
    }
  }
  for (const auto& b : spec.bumps) {
    const double g = b.amplitude * std::exp(-dist2(u, b.center) / (b.width * b.width));
    for (int i = 0; i < m; ++i) out[i] += -2.0 * g * (u[i] - b.center[i]) / (b.width * b.width);
  }
}

std::vector<double> eval_w_grad(const PotentialSpec& spec, std::span<const double> u) {
  std::vector<double> g(spec.m);
  eval_w_grad(spec, u, g);
  return g;
}

void eval_w_hess(const PotentialSpec& spec, std::span<const double> u, std::span<double> out) {
  const int m = spec.m;
  if (spec.alpha < 2.0) throw UnsupportedAlpha("Hessian requires alpha = 2");
  std::fill(out.begin(), out.begin() + m * m, 0.0);
  if (spec.form == PotentialForm::Ring) {
    const double r2 = u[0] * u[0] + u[1] * u[1];
    for (int i = 0; i < 2; ++i) {
      for (int k = 0; k < 2; ++k) out[i * 2 + k] = spec.scale * 2.0 * u[i] * u[k];
      out[i * 2 + i] += spec.scale * (r2 - 1.0);
    }
    out[3] += spec.scale * 2.0 * spec.anisotropy;
  } else {
    const int n = static_cast<int>(spec.wells.size());
    double f[16];
    for (int j = 0; j < n; ++j) f[j] = dist2(u, spec.wells[j]);
    for (int j = 0; j < n; ++j) {
      double others = 1.0;
      for (int k = 0; k < n; ++k)
        if (k != j) others *= f[k];
      for (int i = 0; i < m; ++i) out[i * m + i] += spec.scale * 2.0 * others;
      for (int k = 0; k < n; ++k) {
        if (k == j) continue;
        double rest = 1.0;
        for (int l = 0; l < n; ++l)
          if (l != j && l != k) rest *= f[l];
        for (int i = 0; i < m; ++i)
          for (int c = 0; c < m; ++c)
            out[i * m + c] +=
                spec.scale * 4.0 * rest * (u[i] - spec.wells[j][i]) * (u[c] - spec.wells[k][c]);
      }
    }
  }
  for (const auto& b : spec.bumps) {
    const double w2 = b.width * b.width;
    const double g = b.amplitude * std::exp(-dist2(u, b.center) / w2);
    for (int i = 0; i < m; ++i) {
      for (int c = 0; c < m; ++c)
        out[i * m + c] += g * 4.0 * (u[i] - b.center[i]) * (u[c] - b.center[c]) / (w2 * w2);
      out[i * m + i] -= g * 2.0 / w2;
    }
  }
}

std::vector<double> eval_w_hess(const PotentialSpec& spec, std::span<const double> u) {
  std::vector<double> h(spec.m * spec.m);
  eval_w_hess(spec, u, h);
  return h;
}

std::pair<int, double> nearest_well(const PotentialSpec& spec, std::span<const double> u) {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < spec.wells.size(); ++j) {
    const double d = dist2(u, spec.wells[j]);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(j);
    }
  }
  return {best, std::sqrt(bd)};
}

double smallest_symmetric_eigenvalue(std::span<const double> h, int m) {
  Eigen::MatrixXd a(m, m);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k) a(i, k) = 0.5 * (h[i * m + k] + h[k * m + i]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

Box default_box(const PotentialSpec& spec, double pad) {
  Box b{spec.wells.front(), spec.wells.front()};
  for (const auto& a : spec.wells) {
    for (int i = 0; i < spec.m; ++i) {
      b.lo[i] = std::min(b.lo[i], a[i]);
      b.hi[i] = std::max(b.hi[i], a[i]);
    }
  }
  for (int i = 0; i < spec.m; ++i) {
    b.lo[i] -= pad;
    b.hi[i] += pad;
  }
  return b;
}

namespace {

std::vector<std::vector<double>> sample_directions(int m, int count, std::uint64_t seed) {
  std::vector<std::vector<double>> dirs;
  if (m == 1) return {{1.0}, {-1.0}};
  if (m == 2) {
    for (int k = 0; k < count; ++k) {
      const double t = 2.0 * std::numbers::pi * k / count;
      dirs.push_back({std::cos(t), std::sin(t)});
    }
    return dirs;
  }
  if (m == 3) {
    // Fibonacci sphere
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5) / count;
      const double r = std::sqrt(1.0 - z * z);
      dirs.push_back({r * std::cos(golden * k), r * std::sin(golden * k), z});
    }
    return dirs;
  }
  Rng rng = Rng(seed).split(0xd1);
  for (int k = 0; k < count; ++k) {
    std::vector<double> v(m);
    double n2 = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      n2 += x * x;
    }
    for (auto& x : v) x /= std::sqrt(n2);
    dirs.push_back(std::move(v));
  }
  return dirs;
}

}  // namespace

HypothesisReport check_hypotheses(const PotentialSpec& spec, const Box& box, int samples,
                                  const HypothesisOptions& opts) {
  if (samples < 1) throw std::invalid_argument("check_hypotheses: samples must be >= 1");
  spec.validate();
  const int m = spec.m;
  HypothesisReport rep;
  rep.samples = samples;

  double separation = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < spec.wells.size(); ++j)
    for (std::size_t k = j + 1; k < spec.wells.size(); ++k)
      separation = std::min(separation, std::sqrt(dist2(spec.wells[j], spec.wells[k])));
  rep.rho0 = opts.rho0 > 0.0 ? opts.rho0 : std::min(1.0, 0.25 * separation);

  Rng rng = Rng(opts.seed).split(0x11);
  rep.min_sampled_value = std::numeric_limits<double>::infinity();
  rep.positivity_gap = std::numeric_limits<double>::infinity();
  std::vector<double> u(m), uh(m);
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < m; ++i) u[i] = rng.uniform(box.lo[i], box.hi[i]);
    const double w = eval_w(spec, u);
    rep.min_sampled_value = std::min(rep.min_sampled_value, w);
    if (!(w >= 0.0)) {
      rep.nonnegative = false;
      throw HypothesisViolated("W(u) = " + std::to_string(w) + " < 0 at u = " + format_point(u));
    }
    const double dw = nearest_well(spec, u).second;
    if (dw > rep.rho0) {
      rep.positivity_gap = std::min(rep.positivity_gap, w);
      if (w <= 0.0) throw HypothesisViolated("W vanishes off the wells at u = " + format_point(u));
    }
    if (spec.symmetric) {
      uh = u;
      uh[0] = -uh[0];
      const double d = std::abs(eval_w(spec, uh) - w);
      rep.symmetry_defect = std::max(rep.symmetry_defect, d);
    }
  }
  rep.symmetry_checked = spec.symmetric;
  rep.symmetric = spec.symmetric && rep.symmetry_defect == 0.0;

  const auto dirs = sample_directions(m, opts.directions, opts.seed);
  std::vector<double> g(m), h(m * m);
  for (const auto& a : spec.wells) {
    WellEstimate est;
    est.well = a;
    est.value = eval_w(spec, a);
    if (est.value != 0.0) throw HypothesisViolated("W(a) = " + std::to_string(est.value) + " != 0 at well " + format_point(a));
    est.c_star = std::numeric_limits<double>::infinity();
    for (const auto& nu : dirs) {
      for (int k = 1; k <= opts.radii; ++k) {
        const double rho = rep.rho0 * k / opts.radii;
        for (int i = 0; i < m; ++i) u[i] = a[i] + rho * nu[i];
        const double w = eval_w(spec, u);
        if (!(w > 0.0)) throw HypothesisViolated("W vanishes near well at u = " + format_point(u));
        eval_w_grad(spec, u, g);
        double radial = 0.0;
        for (int i = 0; i < m; ++i) radial += g[i] * nu[i];
        const double ratio = radial / std::pow(rho, spec.alpha - 1.0);
        if (ratio < est.c_star) {
          est.c_star = ratio;
          est.worst_rho = rho;
          est.worst_direction = nu;
        }
      }
    }
    if (!(est.c_star > 0.0)) {
      for (int i = 0; i < m; ++i) u[i] = a[i] + est.worst_rho * est.worst_direction[i];
      throw HypothesisViolated("radial derivative bound fails at u = " + format_point(u));
    }
    if (spec.alpha == 2.0) {
      eval_w_hess(spec, a, h);
      est.c0 = std::numeric_limits<double>::infinity();
      for (const auto& nu : dirs) {
        double q = 0.0;
        for (int i = 0; i < m; ++i)
          for (int k = 0; k < m; ++k) q += nu[i] * h[i * m + k] * nu[k];
        est.c0 = std::min(est.c0, q);
      }
      if (!(est.c0 > 0.0)) throw HypothesisViolated("Hessian not positive definite at well " + format_point(a));
    }
    rep.wells.push_back(std::move(est));
  }
  return rep;
}

namespace {

// Composite midpoint rule for int sqrt(2W) along the straight segment z1 -> z2.
double segment_cost(const PotentialSpec& spec, std::span<const double> z1,
                    std::span<const double> z2, double resolution) {
  const int m = spec.m;
  double len2 = 0.0;
  for (int i = 0; i < m; ++i) len2 += (z2[i] - z1[i]) * (z2[i] - z1[i]);
  const double len = std::sqrt(len2);
  if (len == 0.0) return 0.0;
  const int steps = std::max(1, static_cast<int>(std::ceil(len / resolution - 1e-9)));
  std::vector<double> z(m);
  double sum = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double t = (k + 0.5) / steps;
    for (int i = 0; i < m; ++i) z[i] = z1[i] + t * (z2[i] - z1[i]);
    sum += std::sqrt(2.0 * std::max(0.0, eval_w(spec, z)));
  }
  return sum * len / steps;
}

}  // namespace

double geodesic_distance(const PotentialSpec& spec, std::span<const double> z1,
                         std::span<const double> z2, double resolution, const Box* box_in) {
  if (!(resolution > 0.0)) throw std::invalid_argument("geodesic_distance: resolution must be > 0");
  const int m = spec.m;
  bool same = true;
  for (int i = 0; i < m; ++i) same = same && z1[i] == z2[i];
  if (same) return 0.0;
  if (m == 1) return segment_cost(spec, z1, z2, resolution);
  if (m > 3) throw std::invalid_argument("geodesic_distance: lattice search supports m <= 3");

  Box box = box_in ? *box_in : default_box(spec);
  for (int i = 0; i < m; ++i) {
    box.lo[i] = std::min({box.lo[i], z1[i], z2[i]});
    box.hi[i] = std::max({box.hi[i], z1[i], z2[i]});
  }
  std::array<int, 3> shape{1, 1, 1};
  std::size_t total = 1;
  for (int i = 0; i < m; ++i) {
    shape[i] = static_cast<int>(std::ceil((box.hi[i] - box.lo[i]) / resolution - 1e-9)) + 1;
    total *= static_cast<std::size_t>(shape[i]);
  }
  if (total > 50'000'000) throw std::invalid_argument("geodesic_distance: lattice too large");

  auto coord_of = [&](std::size_t idx, std::span<double> z) {
    for (int i = m - 1; i >= 0; --i) {
      z[i] = box.lo[i] + resolution * static_cast<double>(idx % shape[i]);
      idx /= shape[i];
    }
  };
  auto index_of = [&](const std::array<int, 3>& c) {
    std::size_t idx = 0;
    for (int i = 0; i < m; ++i) idx = idx * shape[i] + c[i];
    return idx;
  };

  // Extra nodes: total (source z1) and total+1 (target z2), each linked to the
  // corners of the lattice cell containing it.
  const std::size_t src = total, dst = total + 1;
  auto cell_corners = [&](std::span<const double> z) {
    std::array<int, 3> base{0, 0, 0};
    for (int i = 0; i < m; ++i) {
      base[i] = std::clamp(static_cast<int>(std::floor((z[i] - box.lo[i]) / resolution)), 0,
                           std::max(0, shape[i] - 2));
    }
    std::vector<std::size_t> corners;
    for (int mask = 0; mask < (1 << m); ++mask) {
      std::array<int, 3> c = base;
      for (int i = 0; i < m; ++i) c[i] = std::min(shape[i] - 1, c[i] + ((mask >> i) & 1));
      corners.push_back(index_of(c));
    }
    return corners;
  };
  const auto src_corners = cell_corners(z1);
  const auto dst_corners = cell_corners(z2);

  std::vector<std::array<int, 3>> offsets;
  for (int dx = -1; dx <= 1; ++dx)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dz = (m == 3 ? -1 : 0); dz <= (m == 3 ? 1 : 0); ++dz)
        if (dx || dy || dz) offsets.push_back({dx, dy, dz});

  std::vector<double> dist(total + 2, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[src] = 0.0;
  heap.push({0.0, src});
  std::vector<double> za(m), zb(m), zm(m);
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    if (v == dst) return d;
    auto relax = [&](std::size_t w, double cost) {
      if (d + cost < dist[w]) {
        dist[w] = d + cost;
        heap.push({dist[w], w});
      }
    };
    if (v == src) {
      for (auto c : src_corners) {
        coord_of(c, zb);
        relax(c, segment_cost(spec, z1, zb, resolution));
      }
      continue;
    }
    coord_of(v, za);
    if (std::find(dst_corners.begin(), dst_corners.end(), v) != dst_corners.end())
      relax(dst, segment_cost(spec, za, z2, resolution));
    std::array<int, 3> c{0, 0, 0};
    std::size_t rem = v;
    for (int i = m - 1; i >= 0; --i) {
      c[i] = static_cast<int>(rem % shape[i]);
      rem /= shape[i];
    }
    for (const auto& off : offsets) {
      std::array<int, 3> nc = c;
      bool inside = true;
      double len2 = 0.0;
      for (int i = 0; i < m; ++i) {
        nc[i] += off[i];
        inside = inside && nc[i] >= 0 && nc[i] < shape[i];
        len2 += off[i] * off[i];
      }
      if (!inside) continue;
      const std::size_t w = index_of(nc);
      for (int i = 0; i < m; ++i) zm[i] = za[i] + 0.5 * resolution * off[i];
      relax(w, std::sqrt(2.0 * std::max(0.0, eval_w(spec, zm))) * resolution * std::sqrt(len2));
    }
  }
  return dist[dst];
}

}  // namespace phaselab

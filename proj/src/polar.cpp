#include "phaselab/polar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "phaselab/error.hpp"
#include "phaselab/parallel.hpp"

namespace phaselab {

namespace {

void check_well(int m, std::span<const double> well) {
  if (static_cast<int>(well.size()) != m) throw std::invalid_argument("polar: well has wrong dimension");
}

double radius_of(const Grid& g, std::size_t i, const std::array<double, 3>& c) {
  const auto x = g.coord(i);
  double s = 0.0;
  for (int a = 0; a < g.n; ++a) s += (x[a] - c[a]) * (x[a] - c[a]);
  return std::sqrt(s);
}

double sq_dist(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
  return s;
}

bool zero_direction(const PolarDecomposition& p, std::size_t i) {
  for (double v : p.direction(i))
    if (v != 0.0) return false;
  return true;
}

// int q^2 |grad nu|^2 with the arithmetic mean of q on each edge; edges
// touching a nu = 0 node contribute nothing.
double q2_grad_nu(const Field& f, const RegionMask& region, const std::vector<double>& q,
                  const PolarDecomposition& p) {
  return edge_integral(f, region, [&](std::size_t i, std::size_t j) {
    if (zero_direction(p, i) || zero_direction(p, j)) return 0.0;
    const double qm = 0.5 * (q[i] + q[j]);
    return qm * qm * sq_dist(p.direction(i), p.direction(j));
  });
}

double grad_scalar(const Field& f, const RegionMask& region, const std::vector<double>& q) {
  return edge_integral(f, region, [&](std::size_t i, std::size_t j) { return (q[j] - q[i]) * (q[j] - q[i]); });
}

}  // namespace

PolarDecomposition to_polar(const Field& f, std::span<const double> well, double q_min) {
  check_well(f.m(), well);
  PolarDecomposition p;
  p.grid = f.grid();
  p.m = f.m();
  p.well.assign(well.begin(), well.end());
  p.q.assign(f.size(), 0.0);
  p.nu.assign(f.size() * f.m(), 0.0);
  p.mask = f.mask();
  parallel_for(f.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      if (!f.active(i)) continue;
      const auto u = f.at(i);
      const double q = std::sqrt(sq_dist(u, well));
      p.q[i] = q;
      if (q <= q_min) continue;
      for (int k = 0; k < p.m; ++k) p.nu[i * p.m + k] = (u[k] - well[k]) / q;
    }
  });
  return p;
}

Field PolarDecomposition::to_field() const {
  if (m + 1 > kMaxComponents) throw std::invalid_argument("polar: too many components to pack");
  Field f(grid, m + 1);
  f.mask() = mask;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto v = f.at(i);
    v[0] = q[i];
    for (int k = 0; k < m; ++k) v[k + 1] = nu[i * m + k];
  }
  return f;
}

Field PolarDecomposition::reconstruct() const {
  Field f(grid, m);
  f.mask() = mask;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto v = f.at(i);
    for (int k = 0; k < m; ++k) v[k] = well[k] + q[i] * nu[i * m + k];
  }
  return f;
}

EnergySplit energy_split(const Field& f, std::span<const double> well, const RegionMask& region,
                         const PotentialSpec& spec) {
  const auto p = to_polar(f, well);
  EnergySplit s;
  s.grad_q = grad_scalar(f, region, p.q);
  s.q2_grad_nu = q2_grad_nu(f, region, p.q, p);
  s.potential = energy_parts(f, region, spec, 1.0).potential;
  s.omitted = edge_integral(f, region, [&](std::size_t i, std::size_t j) {
    if (!zero_direction(p, i) && !zero_direction(p, j)) return 0.0;
    return sq_dist(f.at(i), f.at(j)) - (p.q[j] - p.q[i]) * (p.q[j] - p.q[i]);
  });
  return s;
}

double HelmholtzProfile::value(double radius) const {
  if (radius >= R) return 1.0;
  const double x = std::max(radius, 0.0) / (r[1] - r[0]);
  const std::size_t k = std::min(static_cast<std::size_t>(x), r.size() - 2);
  const double t = x - static_cast<double>(k);
  return (1 - t) * phi[k] + t * phi[k + 1];
}

namespace {

// Second-order finite differences on nodes r_i = i R / (N - 1). The centre row
// uses the limit n phi'' of the radial Laplacian.
std::vector<double> solve_radial(double R, double c1, int n, int N) {
  const double dr = R / (N - 1);
  const double dr2 = dr * dr;
  std::vector<double> lo(N, 0.0), di(N, 0.0), up(N, 0.0), rhs(N, 0.0);
  di[0] = -2.0 * n / dr2 - c1;
  up[0] = 2.0 * n / dr2;
  for (int i = 1; i < N - 1; ++i) {
    const double ri = i * dr;
    const double adv = (n - 1) / (2.0 * ri * dr);
    lo[i] = 1.0 / dr2 - adv;
    di[i] = -2.0 / dr2 - c1;
    up[i] = 1.0 / dr2 + adv;
  }
  di[N - 1] = 1.0;
  rhs[N - 1] = 1.0;
  for (int i = 1; i < N; ++i) {
    const double w = lo[i] / di[i - 1];
    di[i] -= w * up[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  std::vector<double> phi(N);
  phi[N - 1] = rhs[N - 1] / di[N - 1];
  for (int i = N - 2; i >= 0; --i) phi[i] = (rhs[i] - up[i] * phi[i + 1]) / di[i];
  return phi;
}

}  // namespace

HelmholtzProfile helmholtz_profile(double R, double c1, int n, int nodes) {
  if (!(c1 > 0.0)) throw std::invalid_argument("helmholtz_profile: c1 must be positive");
  if (!(R > 0.0)) throw std::invalid_argument("helmholtz_profile: R must be positive");
  if (n < 1 || n > 3) throw std::invalid_argument("helmholtz_profile: dimension must be 1, 2 or 3");
  if (nodes < 3) throw std::invalid_argument("helmholtz_profile: at least 3 nodes");
  const auto coarse = solve_radial(R, c1, n, nodes);
  const auto fine = solve_radial(R, c1, n, 2 * nodes - 1);
  HelmholtzProfile p;
  p.n = n;
  p.R = R;
  p.c1 = c1;
  p.r.resize(nodes);
  p.phi.resize(nodes);
  for (int i = 0; i < nodes; ++i) {
    p.r[i] = R * i / (nodes - 1);
    p.phi[i] = (4.0 * fine[2 * i] - coarse[i]) / 3.0;
  }
  p.phi[nodes - 1] = 1.0;
  p.c2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i + 1 < nodes; ++i) p.c2 = std::min(p.c2, -std::log(p.phi[i]) / (R - p.r[i]));
  return p;
}

ComparisonProfile ComparisonProfile::power(std::array<double, 3> center, double R, double T, double alpha,
                                           double M) {
  if (!(alpha > 0.0)) throw std::invalid_argument("power profile: alpha must be positive");
  const double tau = std::max(alpha, 1.0);
  if (tau >= 2.0) {
    std::ostringstream os;
    os << "tau = " << tau << " has no power profile; use the helmholtz profile";
    throw UnsupportedAlpha(os.str());
  }
  return power_tau(center, R, T, tau, M);
}

ComparisonProfile ComparisonProfile::power_tau(std::array<double, 3> center, double R, double T, double tau,
                                               double M) {
  if (!(tau >= 0.0) || tau >= 2.0) throw UnsupportedAlpha("power profile needs tau in [0, 2)");
  if (!(R > 0.0) || !(T > 0.0) || T > R) throw std::invalid_argument("power profile: need 0 < T <= R");
  if (!(M > 0.0)) throw std::invalid_argument("power profile: M must be positive");
  ComparisonProfile p;
  p.kind = ProfileKind::Power;
  p.center = center;
  p.R = R;
  p.T = T;
  p.tau = tau;
  p.M = M;
  return p;
}

ComparisonProfile ComparisonProfile::helmholtz(std::array<double, 3> center, double R, double c1, double M,
                                               int n, int nodes) {
  if (!(M > 0.0)) throw std::invalid_argument("helmholtz profile: M must be positive");
  ComparisonProfile p;
  p.kind = ProfileKind::Helmholtz;
  p.center = center;
  p.R = R;
  p.T = R;
  p.c1 = c1;
  p.M = M;
  p.tau = 2.0;
  p.radial = std::make_shared<HelmholtzProfile>(helmholtz_profile(R, c1, n, nodes));
  return p;
}

double ComparisonProfile::exponent() const { return 2.0 / (2.0 - tau); }

double ComparisonProfile::H() const { return M / std::pow(T, exponent()); }

double ComparisonProfile::value(double r) const {
  if (r > R) return std::numeric_limits<double>::infinity();
  if (kind == ProfileKind::Helmholtz) return M * radial->value(r);
  const double s = r - (R - T);
  return s <= 0.0 ? 0.0 : H() * std::pow(s, exponent());
}

Comparison build_comparison(const Field& f, std::span<const double> well, const ComparisonProfile& profile,
                            double lambda) {
  check_well(f.m(), well);
  if (!(lambda >= 0.0)) throw std::invalid_argument("build_comparison: lambda must be nonnegative");
  const Grid& g = f.grid();
  const auto p = to_polar(f, well);
  Comparison c;
  c.sigma = f;
  c.lambda = lambda;
  c.q_h.assign(f.size(), std::numeric_limits<double>::infinity());
  c.q_sigma = p.q;
  c.beta.assign(f.size(), 0.0);
  parallel_for(f.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      if (!f.active(i)) continue;
      const double r = radius_of(g, i, profile.center);
      if (r > profile.R) continue;
      const double qh = profile.value(r);
      c.q_h[i] = qh;
      if (p.q[i] <= qh) continue;
      c.q_sigma[i] = qh;
      auto s = c.sigma.at(i);
      for (int k = 0; k < f.m(); ++k) s[k] = well[k] + qh * p.nu[i * f.m() + k];
      c.beta[i] = std::min(p.q[i] - qh, lambda);
    }
  });
  return c;
}

ProfileCheck power_profile_check(const ComparisonProfile& profile, int n, int nodes, double c1_claim) {
  if (profile.kind != ProfileKind::Power) throw std::invalid_argument("power_profile_check: not a power profile");
  if (n < 1 || n > 3) throw std::invalid_argument("power_profile_check: dimension must be 1, 2 or 3");
  if (nodes < 5) throw std::invalid_argument("power_profile_check: at least 5 nodes");
  const double r0 = profile.R - profile.T;
  const double dr = profile.T / (nodes - 1);
  const double p = profile.exponent();
  const double H = profile.H();
  ProfileCheck out;
  out.nodes = nodes;
  out.c1_analytic = std::pow(H, 2.0 - profile.tau) * p * (p - 1.0 + (n - 1) * profile.T / profile.R);
  out.inner_gradient = (profile.value(r0 + dr) - profile.value(r0)) / dr;
  out.c1 = 0.0;
  for (int i = 1; i < nodes - 1; ++i) {
    const double r = r0 + i * dr;
    const double qm = profile.value(r - dr), q0 = profile.value(r), qp = profile.value(r + dr);
    const double lap = (qp - 2 * q0 + qm) / (dr * dr) + (r > 0.0 ? (n - 1) / r * (qp - qm) / (2 * dr) : 0.0);
    const double denom = std::pow(q0, profile.tau - 1.0);
    const double ratio = lap / denom;
    if (ratio > out.c1) {
      out.c1 = ratio;
      out.worst_radius = r;
    }
    if (c1_claim > 0.0 && lap > c1_claim * denom) {
      std::ostringstream os;
      os << "Lap q^h = " << lap << " exceeds " << c1_claim << " (q^h)^(tau-1) = " << c1_claim * denom
         << " at radial node " << i << " (r = " << r << ")";
      throw CheckFailed(os.str());
    }
  }
  return out;
}

IdentityReport verify_identity(const Field& u, const Field& sigma, std::span<const double> well,
                               const RegionMask& region, const PotentialSpec& spec, double tol) {
  if (!(u.grid() == sigma.grid()) || u.m() != sigma.m())
    throw std::invalid_argument("verify_identity: u and sigma live on different grids");
  const auto pu = to_polar(u, well);
  const auto ps = to_polar(sigma, well);
  IdentityReport r;
  r.lhs = 0.5 * (grad_scalar(u, region, pu.q) - grad_scalar(u, region, ps.q));
  r.j_u = energy(u, region, spec);
  r.j_sigma = energy(sigma, region, spec);
  r.nu_term = 0.5 * (q2_grad_nu(u, region, ps.q, pu) - q2_grad_nu(u, region, pu.q, pu));
  r.w_term = energy_parts(sigma, region, spec).potential - energy_parts(u, region, spec).potential;
  r.rhs = r.j_u - r.j_sigma + r.nu_term + r.w_term;
  r.mismatch = r.lhs - r.rhs;
  r.tol = tol;
  r.inequality = r.lhs <= r.w_term + tol;
  return r;
}

}  // namespace phaselab

#include "phaselab/connection1d.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "phaselab/error.hpp"
#include "phaselab/parallel.hpp"
#include "phaselab/rng.hpp"

namespace phaselab {

namespace {

double sq(double x) { return x * x; }

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += sq(a[k] - b[k]);
  return s;
}

Curve make_curve(double L, int N, int m) {
  Curve c;
  c.L = L;
  c.N = N;
  c.m = m;
  c.values.assign(static_cast<std::size_t>(N) * m, 0.0);
  return c;
}

bool same_grid(const Curve& a, const Curve& b) { return a.N == b.N && a.m == b.m && a.L == b.L; }

// Solves the tridiagonal system (lo, di, up) x = rhs in place of rhs.
void thomas(std::vector<double> lo, std::vector<double> di, const std::vector<double>& up, std::vector<double>& rhs) {
  const std::size_t n = di.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = lo[i] / di[i - 1];
    di[i] -= w * up[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= di[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - up[i] * rhs[i + 1]) / di[i];
}

// Fills nodes s < 0 from nodes s > 0 by v(-s) = hat(v(s)).
void reflect(Curve& c) {
  const int mid = (c.N - 1) / 2;
  for (int j = 1; j <= mid; ++j) {
    const auto src = c.at(mid + j);
    auto dst = c.at(mid - j);
    dst[0] = -src[0];
    for (int k = 1; k < c.m; ++k) dst[k] = src[k];
  }
  c.at(mid)[0] = 0.0;
}

double ode_residual(const Curve& v, const PotentialSpec& spec) {
  const double h2 = sq(v.h());
  std::vector<double> g(v.m);
  double r = 0.0;
  for (int i = 1; i + 1 < v.N; ++i) {
    eval_w_grad(spec, v.at(i), g);
    for (int k = 0; k < v.m; ++k) {
      const double lap = (v.at(i + 1)[k] - 2 * v.at(i)[k] + v.at(i - 1)[k]) / h2;
      r = std::max(r, std::abs(lap - g[k]));
    }
  }
  return r;
}

void check_quadratic(const PotentialSpec& spec) {
  if (spec.form == PotentialForm::PowerProduct && spec.alpha < 2.0)
    throw UnsupportedAlpha("connections and their linearization need quadratic wells");
}

int plus_well(const PotentialSpec& spec) {
  int best = 0;
  for (std::size_t j = 1; j < spec.wells.size(); ++j)
    if (spec.wells[j][0] > spec.wells[best][0]) best = static_cast<int>(j);
  return best;
}

}  // namespace

double reflection_defect(const Curve& v) {
  double d = 0.0;
  for (int i = 0; i < v.N; ++i) {
    const auto a = v.at(i), b = v.at(v.N - 1 - i);
    d = std::max(d, std::abs(a[0] + b[0]));
    for (int k = 1; k < v.m; ++k) d = std::max(d, std::abs(a[k] - b[k]));
  }
  return d;
}

double inner(const Curve& a, const Curve& b) {
  if (!same_grid(a, b)) throw std::invalid_argument("inner: curves on different grids");
  double s = 0.0;
  for (int i = 0; i < a.N; ++i) {
    double d = 0.0;
    for (int k = 0; k < a.m; ++k) d += a.at(i)[k] * b.at(i)[k];
    s += (i == 0 || i == a.N - 1 ? 0.5 : 1.0) * d;
  }
  return s * a.h();
}

double norm(const Curve& a) { return std::sqrt(inner(a, a)); }

ActionValue action(const Curve& v, const PotentialSpec& spec, std::span<const double> a_minus,
                   std::span<const double> a_plus) {
  const double h = v.h();
  double kin = 0.0, pot = 0.0;
  for (int i = 0; i + 1 < v.N; ++i) kin += sq_dist(v.at(i + 1), v.at(i));
  for (int i = 0; i < v.N; ++i) pot += (i == 0 || i == v.N - 1 ? 0.5 : 1.0) * eval_w(spec, v.at(i));
  ActionValue out;
  out.value = kin / (2 * h) + h * pot;
  out.admissible = std::sqrt(sq_dist(v.at(0), a_minus)) <= 1e-6 && std::sqrt(sq_dist(v.at(v.N - 1), a_plus)) <= 1e-6;
  return out;
}

double action(const ConnectionProfile& e, const PotentialSpec& spec) {
  return action(e.curve, spec, e.a_minus, e.a_plus).value;
}

ConnectionProfile solve_connection(const PotentialSpec& spec, const ConnectionOptions& opts) {
  spec.validate();
  check_quadratic(spec);
  if (!spec.symmetric) throw std::invalid_argument("solve_connection: potential lacks the reflection symmetry");
  if (opts.N < 5 || opts.N % 2 == 0) throw std::invalid_argument("solve_connection: N must be odd and >= 5");
  if (!(opts.L > 0.0) || !(opts.dt > 0.0)) throw std::invalid_argument("solve_connection: L and dt must be positive");
  const int m = spec.m;
  ConnectionProfile e;
  e.a_plus = spec.wells[plus_well(spec)];
  e.a_minus = e.a_plus;
  e.a_minus[0] = -e.a_minus[0];
  if (!(e.a_plus[0] > 0.0)) throw std::invalid_argument("solve_connection: wells coincide under the reflection");

  Curve v = make_curve(opts.L, opts.N, m);
  for (int i = 0; i < v.N; ++i) {
    const double s = v.s(i);
    const double t = 0.5 * (1 + std::tanh(s));
    for (int k = 0; k < m; ++k) {
      const double b = k < static_cast<int>(opts.bias.size()) && k > 0 ? opts.bias[k] : 0.0;
      v.at(i)[k] = e.a_minus[k] + (e.a_plus[k] - e.a_minus[k]) * t + b / std::cosh(s);
    }
  }
  for (int k = 0; k < m; ++k) {
    v.at(0)[k] = e.a_minus[k];
    v.at(v.N - 1)[k] = e.a_plus[k];
  }
  reflect(v);

  // Half line s_j = j h, j = 0..H; node H is the Dirichlet end. Component 0 is
  // odd (zero at s = 0), the rest even (mirror ghost at s = 0).
  const int mid = (v.N - 1) / 2;
  const int H = mid;
  const double h = v.h(), r = opts.dt / (h * h);
  std::vector<double> g(m), rhs;
  long it = 0;
  double res = ode_residual(v, spec);
  while (res > opts.tol && it < opts.max_iters) {
    std::vector<std::vector<double>> force(H, std::vector<double>(m));
    for (int j = 0; j < H; ++j) {
      eval_w_grad(spec, v.at(mid + j), g);
      for (int k = 0; k < m; ++k) force[j][k] = g[k];
    }
    for (int k = 0; k < m; ++k) {
      const int first = k == 0 ? 1 : 0;
      const int n = H - first;
      std::vector<double> lo(n, -r), di(n, 1 + 2 * r), up(n, -r);
      rhs.assign(n, 0.0);
      for (int q = 0; q < n; ++q) {
        const int j = q + first;
        rhs[q] = v.at(mid + j)[k] - opts.dt * force[j][k];
      }
      if (first == 0) up[0] = -2 * r;
      rhs[n - 1] += r * e.a_plus[k];
      thomas(lo, di, up, rhs);
      for (int q = 0; q < n; ++q) v.at(mid + q + first)[k] = rhs[q];
    }
    reflect(v);
    ++it;
    res = ode_residual(v, spec);
  }
  if (res > opts.tol) {
    std::ostringstream os;
    os << "connection residual " << res << " after " << it << " iterations";
    throw NoConvergence(os.str());
  }
  e.curve = std::move(v);
  e.iterations = it;
  e.residual = res;
  e.action = action(e, spec);
  e.symmetric = reflection_defect(e.curve) <= 1e-12;

  // Tail fit on [L/2, 0.8 L]; the clamp at s = L bends the last stretch.
  std::vector<double> xs, ys;
  for (int i = mid; i < e.curve.N; ++i) {
    const double s = e.curve.s(i);
    if (s < 0.5 * opts.L || s > 0.8 * opts.L) continue;
    const double d = std::sqrt(sq_dist(e.curve.at(i), e.a_plus));
    if (d <= 0.0) continue;
    xs.push_back(s);
    ys.push_back(std::log(d));
  }
  const double lmin = smallest_symmetric_eigenvalue(eval_w_hess(spec, e.a_plus), m);
  const double k_min = 0.5 * std::sqrt(std::max(lmin, 0.0));
  if (xs.size() >= 3) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= xs.size();
    my /= xs.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += sq(xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    e.k = -sxy / sxx;
    e.K = std::exp(my + e.k * mx);
  }
  if (xs.size() < 3 || !(e.k >= k_min)) {
    std::ostringstream os;
    os << "tail rate " << e.k << " on [L/2, 0.8L] is below " << k_min << "; increase L";
    throw TruncationTooShort(os.str());
  }
  return e;
}

EffectivePotentialEval effective_potential(const Curve& v, const ConnectionProfile& e, const PotentialSpec& spec) {
  if (!same_grid(v, e.curve)) throw NonAdmissible("curve lives on a different grid than the connection");
  const auto a = action(v, spec, e.a_minus, e.a_plus);
  if (!a.admissible) throw NonAdmissible("curve does not join a_- to a_+");
  const double defect = reflection_defect(v);
  if (defect > 1e-9) {
    std::ostringstream os;
    os << "curve breaks the reflection symmetry by " << defect;
    throw NonAdmissible(os.str());
  }
  EffectivePotentialEval out;
  out.value = a.value - action(e, spec);
  out.nu = v;
  for (std::size_t k = 0; k < v.values.size(); ++k) out.nu.values[k] -= e.curve.values[k];
  out.q = norm(out.nu);
  const double scale = out.q > spec.q_min ? 1.0 / out.q : 0.0;
  for (double& x : out.nu.values) x *= scale;
  return out;
}

HyperbolicityReport hyperbolicity(const ConnectionProfile& e, const PotentialSpec& spec, bool require) {
  check_quadratic(spec);
  const Curve& c = e.curve;
  std::vector<double> hess(static_cast<std::size_t>(c.N) * c.m * c.m);
  for (int i = 0; i < c.N; ++i) {
    const auto H = eval_w_hess(spec, c.at(i));
    std::copy(H.begin(), H.end(), hess.begin() + static_cast<std::ptrdiff_t>(i) * c.m * c.m);
  }
  return hyperbolicity(e, hess, require);
}

HyperbolicityReport hyperbolicity(const ConnectionProfile& e, const std::vector<double>& hessians, bool require) {
  const Curve& c = e.curve;
  const int m = c.m, mid = (c.N - 1) / 2;
  const double h = c.h();
  if (hessians.size() != static_cast<std::size_t>(c.N) * m * m)
    throw std::invalid_argument("hyperbolicity: one m x m Hessian per node expected");
  // Unknowns: half-line nodes j = 0..mid-1 (node mid is s = L, where v = 0);
  // the odd component is dropped at j = 0.
  std::vector<int> index(static_cast<std::size_t>(mid) * m, -1);
  int n = 0;
  for (int j = 0; j < mid; ++j)
    for (int k = 0; k < m; ++k)
      if (!(j == 0 && k == 0)) index[j * m + k] = n++;
  if (n == 0) throw std::invalid_argument("hyperbolicity: no unknowns");

  // K v = lambda D v with D = h diag(w), w = 1/2 at s = 0; S = D^-1/2 K D^-1/2.
  auto weight = [&](int j) { return (j == 0 ? 0.5 : 1.0) * h; };
  double lower = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Triplet<double>> trip;
  for (int j = 0; j < mid; ++j) {
    const double* Hj = hessians.data() + static_cast<std::size_t>(mid + j) * m * m;
    lower = std::min(lower, smallest_symmetric_eigenvalue(std::span<const double>(Hj, m * m), m));
    for (int k = 0; k < m; ++k) {
      const int a = index[j * m + k];
      if (a < 0) continue;
      const double wa = weight(j);
      // Stiffness from the edges (j-1, j) and (j, j+1) on the half line.
      double diag = (j == 0 ? 1.0 : 2.0) / h;
      trip.emplace_back(a, a, diag / wa);
      if (j + 1 < mid) {
        const int b = index[(j + 1) * m + k];
        if (b >= 0) trip.emplace_back(a, b, -1.0 / h / std::sqrt(wa * weight(j + 1)));
      }
      if (j > 0) {
        const int b = index[(j - 1) * m + k];
        if (b >= 0) trip.emplace_back(a, b, -1.0 / h / std::sqrt(wa * weight(j - 1)));
      }
      for (int l = 0; l < m; ++l) {
        const int b = index[j * m + l];
        if (b >= 0) trip.emplace_back(a, b, Hj[k * m + l]);
      }
    }
  }
  Eigen::SparseMatrix<double> S(n, n);
  S.setFromTriplets(trip.begin(), trip.end());
  const double shift = lower - 1.0;
  Eigen::SparseMatrix<double> I(n, n);
  I.setIdentity();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(S - shift * I);
  if (solver.info() != Eigen::Success) throw std::runtime_error("hyperbolicity: factorization failed");

  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i) x[i] += 1e-3 * std::sin(1.0 + i);
  x.normalize();
  double lambda = x.dot(S * x), prev = lambda;
  HyperbolicityReport rep;
  for (rep.iterations = 1; rep.iterations <= 20000; ++rep.iterations) {
    x = solver.solve(x);
    x.normalize();
    const Eigen::VectorXd Sx = S * x;
    lambda = x.dot(Sx);
    const double resid = (Sx - lambda * x).norm();
    if (std::abs(lambda - prev) <= 1e-13 * std::max(1.0, std::abs(lambda)) && resid <= 1e-8) break;
    prev = lambda;
  }
  rep.eta = lambda;
  rep.unknowns = n;
  rep.hyperbolic = lambda > 0.0;

  Curve v = make_curve(c.L, c.N, m);
  for (int j = 0; j < mid; ++j)
    for (int k = 0; k < m; ++k) {
      const int a = index[j * m + k];
      if (a >= 0) v.at(mid + j)[k] = x[a] / std::sqrt(weight(j));
    }
  reflect(v);
  const double nv = norm(v);
  for (double& y : v.values) y /= nv;
  rep.eigenvector = std::move(v);

  if (require && !rep.hyperbolic) {
    std::ostringstream os;
    os << "smallest symmetric eigenvalue " << lambda << " <= 0";
    throw NotHyperbolic(os.str());
  }
  return rep;
}

double quadratic_form(const ConnectionProfile& e, const PotentialSpec& spec, const Curve& nu) {
  const Curve& c = e.curve;
  if (!same_grid(c, nu)) throw std::invalid_argument("quadratic_form: direction on a different grid");
  const double h = c.h();
  double kin = 0.0, pot = 0.0;
  for (int i = 0; i + 1 < c.N; ++i) kin += sq_dist(nu.at(i + 1), nu.at(i));
  for (int i = 0; i < c.N; ++i) {
    const auto H = eval_w_hess(spec, c.at(i));
    double q = 0.0;
    for (int k = 0; k < c.m; ++k)
      for (int l = 0; l < c.m; ++l) q += nu.at(i)[k] * H[k * c.m + l] * nu.at(i)[l];
    pot += (i == 0 || i == c.N - 1 ? 0.5 : 1.0) * q;
  }
  return kin / h + h * pot;
}

std::vector<Curve> random_directions(const ConnectionProfile& e, int count, std::uint64_t seed) {
  const Curve& c = e.curve;
  const Rng base(seed);
  std::vector<Curve> out;
  for (int d = 0; d < count; ++d) {
    Rng rng = base.split(static_cast<std::uint64_t>(d));
    Curve w = make_curve(c.L, c.N, c.m);
    for (int k = 0; k < c.m; ++k)
      for (int b = 0; b < 3; ++b) {
        const double amp = rng.uniform(-1, 1), ctr = rng.uniform(-0.5, 0.5) * c.L, wid = rng.uniform(0.5, 2.0);
        for (int i = 0; i < c.N; ++i) w.at(i)[k] += amp * std::exp(-sq((c.s(i) - ctr) / wid));
      }
    // Symmetrize: v(s) = (w(s) + hat w(-s)) / 2, pinned to zero at s = +-L.
    Curve v = w;
    for (int i = 0; i < c.N; ++i) {
      const auto mirror = w.at(c.N - 1 - i);
      v.at(i)[0] = 0.5 * (w.at(i)[0] - mirror[0]);
      for (int k = 1; k < c.m; ++k) v.at(i)[k] = 0.5 * (w.at(i)[k] + mirror[k]);
    }
    for (int k = 0; k < c.m; ++k) v.at(0)[k] = v.at(c.N - 1)[k] = 0.0;
    const double nv = norm(v);
    for (double& x : v.values) x /= nv;
    out.push_back(std::move(v));
  }
  return out;
}

WqqReport wqq_check(const ConnectionProfile& e, const PotentialSpec& spec, const WqqOptions& opts) {
  WqqReport rep;
  rep.eta = hyperbolicity(e, spec).eta;
  rep.c0 = 0.5 * rep.eta;
  rep.q_scan = opts.q_scan;
  if (rep.q_scan.empty())
    for (int i = 0; i <= 40; ++i) rep.q_scan.push_back(0.025 * i);
  const double qmax = *std::max_element(rep.q_scan.begin(), rep.q_scan.end());
  const double delta = opts.delta > 0.0 ? opts.delta : 1e-3 * std::max(qmax, 1e-3);
  const auto dirs = random_directions(e, opts.directions, opts.seed);
  const double a_e = action(e, spec);

  auto w_at = [&](const Curve& nu, double q) {
    Curve v = e.curve;
    for (std::size_t k = 0; k < v.values.size(); ++k) v.values[k] += q * nu.values[k];
    return action(v, spec, e.a_minus, e.a_plus).value - a_e;
  };
  auto dqq = [&](const Curve& nu, double q, double d) {
    return (w_at(nu, q + d) - 2 * w_at(nu, q) + w_at(nu, q - d)) / (d * d);
  };

  const std::size_t nd = dirs.size(), nq = rep.q_scan.size();
  std::vector<double> table(nd * nq);
  rep.dqq0.assign(nd, 0.0);
  rep.form0.assign(nd, 0.0);
  std::vector<double> gap(nd, 0.0), m1(nd, 0.0);
  parallel_tasks(nd, [&](std::size_t d) {
    for (std::size_t i = 0; i < nq; ++i) table[d * nq + i] = dqq(dirs[d], rep.q_scan[i], delta);
    rep.dqq0[d] = dqq(dirs[d], 0.0, delta);
    gap[d] = std::abs(rep.dqq0[d] - dqq(dirs[d], 0.0, 0.5 * delta));
    rep.form0[d] = quadratic_form(e, spec, dirs[d]);
    double ds = 0.0;
    for (int i = 0; i + 1 < dirs[d].N; ++i) ds += sq_dist(dirs[d].at(i + 1), dirs[d].at(i));
    m1[d] = qmax * std::sqrt(ds / dirs[d].h());
  });
  rep.inf_dqq.assign(nq, std::numeric_limits<double>::infinity());
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t i = 0; i < nq; ++i) rep.inf_dqq[i] = std::min(rep.inf_dqq[i], table[d * nq + i]);
    rep.richardson_gap = std::max(rep.richardson_gap, gap[d]);
    rep.m1 = std::max(rep.m1, m1[d]);
  }
  std::vector<std::size_t> order(nq);
  for (std::size_t i = 0; i < nq; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rep.q_scan[a] < rep.q_scan[b]; });
  for (std::size_t i : order) {
    if (rep.inf_dqq[i] < rep.c0) break;
    rep.q_bar = rep.q_scan[i];
  }
  rep.lambda_star = rep.q_bar;
  return rep;
}

InterpBound interp_bound_check(const Curve& f) {
  InterpBound b;
  const double h = f.h();
  double l2 = 0.0, d2 = 0.0;
  for (int i = 0; i < f.N; ++i) {
    double v = 0.0;
    for (int k = 0; k < f.m; ++k) v += sq(f.at(i)[k]);
    b.sup = std::max(b.sup, std::sqrt(v));
    l2 += (i == 0 || i == f.N - 1 ? 0.5 : 1.0) * v;
  }
  // Values outside [-L, L] are zero, so the end jumps count toward |f_s|.
  auto edge = [&](std::span<const double> a, std::span<const double> c) {
    const double d = sq_dist(a, c);
    d2 += d / h;
    b.sup_derivative = std::max(b.sup_derivative, std::sqrt(d) / h);
  };
  const std::vector<double> zero(f.m, 0.0);
  edge(zero, f.at(0));
  for (int i = 0; i + 1 < f.N; ++i) edge(f.at(i), f.at(i + 1));
  edge(f.at(f.N - 1), zero);
  b.l2 = std::sqrt(l2 * h);
  b.l2_derivative = std::sqrt(d2);
  b.sqrt2_bound = std::sqrt(2.0) * std::sqrt(b.l2) * std::sqrt(b.l2_derivative);
  b.two_thirds_bound = std::cbrt(3.0 * b.sup_derivative) * std::pow(b.l2, 2.0 / 3.0);
  b.holds = b.sup <= b.sqrt2_bound && b.sup <= b.two_thirds_bound;
  return b;
}

namespace {

Grid y_grid(const Grid& g) {
  if (g.n < 2) throw std::invalid_argument("cylinder fields need n >= 2");
  return Grid::make(g.n - 1, {g.shape[1], g.shape[2], 1}, g.h, {g.origin[1], g.origin[2], 0.0});
}

void check_truncation(const Grid& g, const Curve& c) {
  if (g.shape[0] != c.N || std::abs(g.h - c.h()) > 1e-12 * c.h() || std::abs(g.origin[0] + c.L) > 1e-9 * c.L) {
    std::ostringstream os;
    os << "axis 0 has " << g.shape[0] << " nodes from " << g.origin[0] << " with spacing " << g.h
       << "; the connection has " << c.N << " nodes on [-" << c.L << ", " << c.L << "]";
    throw TruncationMismatch(os.str());
  }
}

Curve slice(const Field& u, std::size_t y) {
  const Grid& g = u.grid();
  Curve c = make_curve(-g.origin[0], g.shape[0], u.m());
  c.L = 0.5 * g.h * (g.shape[0] - 1);
  const std::size_t stride = g.stride(0);
  for (int i = 0; i < c.N; ++i) {
    const auto src = u.at(static_cast<std::size_t>(i) * stride + y);
    std::copy(src.begin(), src.end(), c.at(i).begin());
  }
  return c;
}

// Modified energy over the y-cells in `region`.
double split_energy(const CylPolar& p, const Field& yf, const RegionMask& region) {
  const double kin = edge_integral(yf, region, [&](std::size_t i, std::size_t j) {
    const double dq = p.q[j] - p.q[i];
    double nu = 0.0;
    if (p.q[i] > kQMin && p.q[j] > kQMin) {
      Curve d = p.nu[j];
      for (std::size_t k = 0; k < d.values.size(); ++k) d.values[k] -= p.nu[i].values[k];
      nu = inner(d, d);
    }
    const double qm = 0.5 * (p.q[i] + p.q[j]);
    return dq * dq + qm * qm * nu;
  });
  const double pot = node_integral(yf, region, [&](std::size_t i) { return p.w[i]; });
  return 0.5 * kin + pot;
}

}  // namespace

CylPolar cyl_polar(const Field& u, const ConnectionProfile& e, const PotentialSpec& spec) {
  const Grid& g = u.grid();
  check_truncation(g, e.curve);
  if (u.m() != e.curve.m) throw TruncationMismatch("field and connection have different components");
  CylPolar p;
  p.ygrid = y_grid(g);
  const std::size_t ny = p.ygrid.size();
  p.q.assign(ny, 0.0);
  p.w.assign(ny, 0.0);
  p.density.assign(ny, 0.0);
  p.nu.resize(ny);
  const double a_e = action(e, spec);
  parallel_tasks(ny, [&](std::size_t y) {
    Curve v = slice(u, y);
    p.w[y] = action(v, spec, e.a_minus, e.a_plus).value - a_e;
    for (std::size_t k = 0; k < v.values.size(); ++k) v.values[k] -= e.curve.values[k];
    p.q[y] = norm(v);
    const double scale = p.q[y] > kQMin ? 1.0 / p.q[y] : 0.0;
    for (double& x : v.values) x *= scale;
    p.nu[y] = std::move(v);
  });

  const Field yf(p.ygrid, 1);
  const auto all = RegionMask::all(yf);
  p.modified_energy = split_energy(p, yf, all);
  double measure = 1.0;
  for (int a = 0; a < p.ygrid.n; ++a) measure *= p.ygrid.h * (p.ygrid.shape[a] - 1);
  p.direct_energy = energy(u, RegionMask::all(u), spec) - a_e * measure;

  // Nodal density with central differences (one-sided at the ends).
  for (std::size_t y = 0; y < ny; ++y) {
    const auto c = p.ygrid.unravel(y);
    double grad = 0.0;
    for (int a = 0; a < p.ygrid.n; ++a) {
      const std::size_t st = p.ygrid.stride(a);
      const bool lo = c[a] > 0, hi = c[a] + 1 < p.ygrid.shape[a];
      const std::size_t i0 = lo ? y - st : y, i1 = hi ? y + st : y;
      const double span = p.ygrid.h * ((lo ? 1 : 0) + (hi ? 1 : 0));
      const double dq = (p.q[i1] - p.q[i0]) / span;
      double dnu = 0.0;
      if (p.q[i0] > kQMin && p.q[i1] > kQMin) {
        Curve d = p.nu[i1];
        for (std::size_t k = 0; k < d.values.size(); ++k) d.values[k] -= p.nu[i0].values[k];
        dnu = inner(d, d) / (span * span);
      }
      grad += dq * dq + p.q[y] * p.q[y] * dnu;
    }
    p.density[y] = 0.5 * grad + p.w[y];
  }
  return p;
}

double level_crossing(const CylPolar& p, double lambda) {
  if (p.ygrid.n != 1) throw std::invalid_argument("level_crossing: needs a one-dimensional y-domain");
  for (std::size_t j = 0; j + 1 < p.q.size(); ++j)
    if (p.q[j] > lambda && p.q[j + 1] <= lambda) {
      const double t = (p.q[j] - lambda) / (p.q[j] - p.q[j + 1]);
      return p.ygrid.origin[0] + (static_cast<double>(j) + t) * p.ygrid.h;
    }
  throw CheckFailed("q never falls through lambda along y");
}

DensityReport cyl_density_scan(const Field& u, const ConnectionProfile& e, const PotentialSpec& spec,
                               std::array<double, 3> y0, const std::vector<double>& radii, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("cyl_density_scan: lambda must be positive");
  const auto p = cyl_polar(u, e, spec);
  const Field yf(p.ygrid, 1);
  DensityReport r;
  r.n = p.ygrid.n;
  r.h = p.ygrid.h;
  r.center = y0;
  r.lambda = r.lambda_star = lambda;
  r.radii = radii;
  const double vol = p.ygrid.cell_volume();
  for (double R : radii) {
    const auto ball = RegionMask::ball(yf, y0, R);
    double V = 0.0, A = 0.0;
    for (std::size_t y = 0; y < p.q.size(); ++y) {
      if (!ball.contains(y)) continue;
      if (p.q[y] > lambda)
        V += vol;
      else
        A += p.w[y] * vol;
    }
    r.V.push_back(V);
    r.A.push_back(A);
    r.J.push_back(split_energy(p, yf, ball));
    r.cell_layer_bound.push_back(ball.cell_layer_bound());
  }
  return r;
}

ProductProbe product_structure_probe(const Field& u, const ConnectionProfile& e, double lambda, double floor) {
  const Grid& g = u.grid();
  check_truncation(g, e.curve);
  const Grid yg = y_grid(g);
  Field dev(yg, 1);
  const std::size_t stride = g.stride(0);
  ProductProbe p;
  for (std::size_t y = 0; y < yg.size(); ++y) {
    double d = 0.0;
    for (int i = 0; i < e.curve.N; ++i)
      d = std::max(d, std::sqrt(sq_dist(u.at(static_cast<std::size_t>(i) * stride + y), e.curve.at(i))));
    dev.at(y)[0] = d;
    p.max_deviation = std::max(p.max_deviation, d);
  }
  p.rigid = p.max_deviation <= 1e-6;
  try {
    const std::vector<double> zero{0.0};
    const auto fit = exp_decay_probe(dev, zero, DecayOptions{.lambda = lambda, .floor = floor});
    p.fitted = true;
    p.k = fit.k;
    p.K = fit.K;
    p.residual = fit.residual;
  } catch (const NoDecayWindow&) {
    p.fitted = false;
  }
  return p;
}

Field extend_connection(const ConnectionProfile& e, const Grid& grid) {
  check_truncation(grid, e.curve);
  Field f(grid, e.curve.m);
  const std::size_t stride = grid.stride(0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto src = e.curve.at(static_cast<int>(i / stride));
    std::copy(src.begin(), src.end(), f.at(i).begin());
  }
  return f;
}

}  // namespace phaselab

#include "phaselab/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "phaselab/error.hpp"

namespace phaselab {

namespace {

double deviation(std::span<const double> u, std::span<const double> a) {
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += (u[k] - a[k]) * (u[k] - a[k]);
  return std::sqrt(s);
}

void check_ball_fits(const Field& f, const std::array<double, 3>& c, double R) {
  const Grid& g = f.grid();
  for (int a = 0; a < g.n; ++a) {
    const double lo = g.origin[a], hi = g.origin[a] + g.h * (g.shape[a] - 1);
    if (c[a] - R < lo - 1e-12 * g.h || c[a] + R > hi + 1e-12 * g.h) {
      std::ostringstream os;
      os << "ball of radius " << R << " leaves the grid along axis " << a;
      throw OutOfDomain(os.str());
    }
  }
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.active(i)) continue;
    const auto x = g.coord(i);
    double s = 0.0;
    for (int a = 0; a < g.n; ++a) s += (x[a] - c[a]) * (x[a] - c[a]);
    if (std::sqrt(s) <= R) {
      std::ostringstream os;
      os << "ball of radius " << R << " contains exterior node " << i;
      throw OutOfDomain(os.str());
    }
  }
}

}  // namespace

DensityReport scan(const Field& f, std::span<const double> well, std::array<double, 3> center,
                   const std::vector<double>& radii, double lambda, const PotentialSpec& spec,
                   const ScanOptions& opts) {
  if (radii.empty()) throw std::invalid_argument("scan: no radii");
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (!(radii[i] > 0.0) || (i > 0 && !(radii[i] > radii[i - 1])))
      throw std::invalid_argument("scan: radii must be positive and increasing");
  const Grid& g = f.grid();
  DensityReport r;
  r.n = g.n;
  r.h = g.h;
  r.center = center;
  r.lambda = lambda;
  r.lambda_star = opts.lambda_star > 0.0 ? opts.lambda_star : lambda;
  r.radii = radii;
  r.T = opts.shell_width > 0.0 ? opts.shell_width : 2.0 * g.h;
  const double r_max = radii.back();
  check_ball_fits(f, center, r_max);

  for (double R : radii) {
    const auto ball = RegionMask::ball(f, center, R);
    r.V.push_back(measure_superlevel(f, well, lambda, ball).value);
    r.A.push_back(sublevel_potential_integral(f, well, lambda, ball, spec));
    r.J.push_back(energy(f, ball, spec, opts.eps));
    r.cell_layer_bound.push_back(ball.cell_layer_bound());
    std::vector<std::pair<double, int>> near;
    for (std::size_t j = 0; j < spec.wells.size(); ++j) {
      std::size_t count = 0;
      for (std::size_t i = 0; i < f.size(); ++i)
        if (ball.contains(i) && deviation(f.at(i), spec.wells[j]) < lambda) ++count;
      near.emplace_back(-static_cast<double>(count), static_cast<int>(j));
    }
    std::stable_sort(near.begin(), near.end());
    r.dominant.emplace_back(near[0].second, near.size() > 1 ? near[1].second : -1);
  }

  const int K = static_cast<int>(std::floor(r_max / r.T + 1e-9));
  for (int k = 1; k <= K; ++k) {
    const auto ball = RegionMask::ball(f, center, k * r.T);
    r.V_shell.push_back(measure_superlevel(f, well, lambda, ball).value);
    r.A_shell.push_back(sublevel_potential_integral(f, well, lambda, ball, spec));
    const auto shell = k == 1 ? ball : RegionMask::shell(f, center, (k - 1) * r.T, k * r.T);
    r.omega.push_back(measure_superlevel(f, well, r.lambda_star, shell).value);
  }
  return r;
}

ExponentFit fit_exponent(const std::vector<double>& values, const std::vector<double>& radii,
                         std::array<double, 2> window) {
  if (values.size() != radii.size()) throw std::invalid_argument("fit_exponent: size mismatch");
  ExponentFit fit;
  fit.window = window;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] < window[0] || radii[i] > window[1]) continue;
    if (!(values[i] > 0.0) || !(radii[i] > 0.0)) {
      ++fit.excluded;
      continue;
    }
    xs.push_back(std::log(radii[i]));
    ys.push_back(std::log(values[i]));
  }
  fit.used = static_cast<int>(xs.size());
  if (fit.used < 4) {
    std::ostringstream os;
    os << fit.used << " usable points in [" << window[0] << ", " << window[1] << "], need 4";
    throw DegenerateWindow(os.str());
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw DegenerateWindow("all radii coincide");
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  for (std::size_t i = 0; i < xs.size(); ++i)
    fit.residual = std::max(fit.residual, std::abs(ys[i] - fit.intercept - fit.exponent * xs[i]));
  return fit;
}

SchemeReport difference_scheme_check(const DensityReport& report, double c2) {
  SchemeReport s;
  s.c2 = c2;
  const int n = report.n;
  const double power = (n - 1.0) / n;
  const double inf = std::numeric_limits<double>::infinity();

  s.c_lambda = inf;
  bool any = false;
  for (std::size_t k = 1; k < report.V_shell.size(); ++k) {
    const double v0 = report.V_shell[k - 1];
    const double lhs = std::pow(v0, power) + v0;
    const double rhs = (report.V_shell[k] - v0) + (report.A_shell[k] - report.A_shell[k - 1]);
    s.scheme_lhs.push_back(lhs);
    s.scheme_rhs.push_back(rhs);
    if (lhs > 0.0) {
      any = true;
      s.c_lambda = std::min(s.c_lambda, std::max(rhs, 0.0) / lhs);
    }
  }

  s.c0 = inf;
  const auto& w = report.omega;
  const double eps = std::exp(-c2 * report.T);
  double partial = 0.0;
  for (std::size_t k = 1; k < w.size(); ++k) {
    partial += w[k - 1];
    double rhs = w[k];
    double ej = 1.0;
    for (std::size_t j = 1; j <= k; ++j) {
      ej *= eps;
      rhs += ej * w[k - j];
    }
    const double lhs = std::pow(partial, power);
    s.shell_lhs.push_back(lhs);
    s.shell_rhs.push_back(rhs);
    if (lhs > 0.0) {
      any = true;
      s.c0 = std::min(s.c0, rhs / lhs);
    }
  }

  s.vacuous = !any;
  if (s.vacuous) {
    s.pass = true;
    return s;
  }
  if (std::isfinite(s.c0)) {
    s.claim_threshold = std::pow(s.c0 / (std::pow(2.0, n + 1) * std::pow(n, power)), n);
    s.claim_holds = true;
    for (std::size_t k = 0; k < w.size(); ++k)
      s.claim_holds = s.claim_holds && w[k] >= s.claim_threshold * std::pow(k + 1.0, n - 1);
  }
  s.pass = s.c_lambda > 0.0 && s.c0 > 0.0;
  return s;
}

LiouvilleReport liouville_probe(const Field& f, std::span<const double> well, int depths) {
  if (static_cast<int>(well.size()) != f.m()) throw std::invalid_argument("liouville_probe: bad well");
  if (depths < 1) throw std::invalid_argument("liouville_probe: need at least one depth");
  const auto dist = distance_to(f, [&](std::size_t i) { return f.tag(i) != NodeTag::Interior; });
  double dmax = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.tag(i) == NodeTag::Interior) dmax = std::max(dmax, dist[i]);
  LiouvilleReport r;
  for (int k = 0; k < depths; ++k) {
    const double d = dmax * k / depths;
    double sup = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f.tag(i) == NodeTag::Interior && dist[i] >= d) sup = std::max(sup, deviation(f.at(i), well));
    r.depth.push_back(d);
    r.sup.push_back(sup);
  }
  r.overall = r.sup.front();
  r.innermost = r.sup.back();
  r.constant = r.innermost <= 1e-6;
  return r;
}

DecayFit exp_decay_probe(const Field& f, std::span<const double> well, const std::vector<double>& distance,
                         const DecayOptions& opts) {
  if (static_cast<int>(well.size()) != f.m()) throw std::invalid_argument("exp_decay_probe: bad well");
  if (distance.size() != f.size()) throw std::invalid_argument("exp_decay_probe: distance size mismatch");
  const double bin = opts.bin > 0.0 ? opts.bin : f.grid().h;
  std::map<long, double> sup;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.tag(i) != NodeTag::Interior || !std::isfinite(distance[i])) continue;
    const long b = std::lround(distance[i] / bin);
    auto& s = sup[b];
    s = std::max(s, deviation(f.at(i), well));
  }
  // The window starts once the profile first drops below lambda and ends at the floor.
  std::vector<double> xs, ys;
  bool entered = false;
  for (const auto& [b, s] : sup) {
    if (!entered && s < opts.lambda) entered = true;
    if (!entered) continue;
    if (s <= opts.floor) break;
    xs.push_back(b * bin);
    ys.push_back(std::log(s));
  }
  if (xs.size() < 3) {
    std::ostringstream os;
    os << "only " << xs.size() << " distance bins between " << opts.floor << " and " << opts.lambda;
    throw NoDecayWindow(os.str());
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  DecayFit fit;
  const double slope = sxy / sxx;
  fit.k = -slope;
  fit.K = std::exp(my - slope * mx);
  fit.window = {xs.front(), xs.back()};
  fit.points = static_cast<int>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    fit.residual = std::max(fit.residual, std::abs(ys[i] - (my + slope * (xs[i] - mx))));
  return fit;
}

DecayFit exp_decay_probe(const Field& f, std::span<const double> well, const DecayOptions& opts) {
  return exp_decay_probe(f, well, distance_to(f, [&](std::size_t i) { return f.tag(i) == NodeTag::Dirichlet; }),
                         opts);
}

LowerBoundReport lower_bound_check(const DensityReport& report) {
  LowerBoundReport r;
  const int n = report.n;
  bool nonzero = false;
  for (double j : report.J) nonzero = nonzero || j > 0.0;
  if (!nonzero) {
    r.skipped = true;
    return r;
  }
  r.c = std::numeric_limits<double>::infinity();
  double prev = -1.0;
  for (std::size_t i = 0; i < report.radii.size(); ++i) {
    const double R = report.radii[i];
    r.c = std::min(r.c, report.J[i] / std::pow(R, n - 1));
    const double ratio = report.J[i] / std::pow(R, n - 2);
    if (prev > 0.0) {
      // Relative error of an energy on B_R from the node-centre rule.
      const double tol = report.cell_layer_bound[i] / (unit_ball_volume(n) * std::pow(R, n));
      const double drop = (prev - ratio) / prev;
      r.worst_drop = std::max(r.worst_drop, drop);
      if (drop > tol && r.monotone) {
        r.monotone = false;
        r.violation = static_cast<int>(i);
      }
    }
    prev = ratio;
  }
  r.pass = r.c > 0.0 && r.monotone;
  return r;
}

}  // namespace phaselab

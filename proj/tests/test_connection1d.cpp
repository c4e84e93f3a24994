#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "phaselab/connection1d.hpp"
#include "phaselab/error.hpp"
#include "phaselab/minimizer.hpp"

using namespace phaselab;

namespace {

const double kSqrt2 = std::numbers::sqrt2;

ConnectionProfile scalar_connection(double L = 10.0, int N = 2001) {
  ConnectionOptions o;
  o.L = L;
  o.N = N;
  return solve_connection(PotentialSpec::two_well(), o);
}

// Dense full-line operator -D2 + W_uu(e) with v(+-L) = 0, scalar case; its
// smallest eigenvalue with an odd eigenvector.
double dense_odd_eigenvalue(const ConnectionProfile& e, const PotentialSpec& spec) {
  const Curve& c = e.curve;
  const int n = c.N - 2;
  const double h = c.h();
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    T(i, i) = 2 / (h * h) + eval_w_hess(spec, c.at(i + 1))[0];
    if (i > 0) T(i, i - 1) = -1 / (h * h);
    if (i + 1 < n) T(i, i + 1) = -1 / (h * h);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd v = es.eigenvectors().col(j);
    if ((v + v.reverse()).norm() < 1e-6) return es.eigenvalues()[j];
  }
  return std::nan("");
}

// e evaluated at s - shift by linear interpolation, clamped at the ends.
double shifted(const Curve& e, double s) {
  const double x = std::clamp((s + e.L) / e.h(), 0.0, e.N - 1.0);
  const int i = std::min(static_cast<int>(x), e.N - 2);
  const double t = x - i;
  return (1 - t) * e.at(i)[0] + t * e.at(i + 1)[0];
}

Curve copy_shape(const Curve& c) {
  Curve out = c;
  std::fill(out.values.begin(), out.values.end(), 0.0);
  return out;
}

}  // namespace

TEST_CASE("scalar connection matches tanh and its action") {
  const auto e = scalar_connection();
  double err = 0.0;
  for (int i = 0; i < e.curve.N; ++i) err = std::max(err, std::abs(e.curve.at(i)[0] - std::tanh(e.curve.s(i) / kSqrt2)));
  CHECK(err <= 1e-4);
  CHECK(std::abs(e.action - 2 * kSqrt2 / 3) <= 1e-4);
  CHECK(e.symmetric);
  CHECK(e.a_minus[0] == -1.0);
  CHECK(e.a_plus[0] == 1.0);
  CHECK(std::abs(e.k - kSqrt2) <= 0.05);
}

TEST_CASE("action under the rescaling e(2s)") {
  // v(s) = e(2s): kinetic doubles and potential halves.
  const auto spec = PotentialSpec::two_well();
  Curve v = copy_shape(scalar_connection().curve);
  for (int i = 0; i < v.N; ++i) v.at(i)[0] = std::tanh(2 * v.s(i) / kSqrt2);
  Curve e = v;
  for (int i = 0; i < e.N; ++i) e.at(i)[0] = std::tanh(e.s(i) / kSqrt2);
  const std::vector<double> am{-1.0}, ap{1.0};
  // Kinetic and potential parts of e separately.
  double kin = 0.0, pot = 0.0;
  for (int i = 0; i + 1 < e.N; ++i) kin += std::pow(e.at(i + 1)[0] - e.at(i)[0], 2) / (2 * e.h());
  for (int i = 0; i < e.N; ++i) pot += (i == 0 || i == e.N - 1 ? 0.5 : 1.0) * eval_w(spec, e.at(i)) * e.h();
  const auto a = action(v, spec, am, ap);
  CHECK(std::abs(a.value - (2 * kin + 0.5 * pot)) <= 1e-4);
  CHECK(a.admissible);
}

TEST_CASE("scalar hyperbolicity against the dense oracle") {
  const auto spec = PotentialSpec::two_well();
  const auto e = scalar_connection();
  const auto rep = hyperbolicity(e, spec);
  CHECK(rep.hyperbolic);
  const auto coarse = scalar_connection(10.0, 401);
  const double dense = dense_odd_eigenvalue(coarse, spec);
  CHECK(std::abs(hyperbolicity(coarse, spec).eta - dense) <= 1e-8 * std::abs(dense));
  CHECK(std::abs(rep.eta - 1.5) <= 0.015);
  CHECK(std::abs(norm(rep.eigenvector) - 1.0) <= 1e-12);
  CHECK(reflection_defect(rep.eigenvector) <= 1e-12);
  // Refinement changes eta by under 2%.
  const auto fine = hyperbolicity(scalar_connection(10.0, 4001), spec);
  CHECK(std::abs(fine.eta - rep.eta) <= 0.02 * rep.eta);
}

TEST_CASE("identity Hessian gives the first odd Dirichlet mode") {
  const auto e = scalar_connection(10.0, 1001);
  std::vector<double> eye(e.curve.N, 1.0);
  const auto rep = hyperbolicity(e, eye);
  const double L = e.curve.L, h = e.curve.h();
  // Discrete eigenvalue of -D2 for sin(pi s / L) on the grid.
  const double exact = 1 + 4 / (h * h) * std::pow(std::sin(std::numbers::pi * h / (2 * L)), 2);
  CHECK(std::abs(rep.eta - exact) <= 1e-9);
  CHECK(std::abs(rep.eta - (1 + std::pow(std::numbers::pi / L, 2))) <= 1e-4);
}

TEST_CASE("ring potential: arc is hyperbolic, straight path is a saddle") {
  const double gamma = 0.05;
  const auto spec = PotentialSpec::ring(gamma);
  ConnectionOptions o;
  o.L = 12;
  o.N = 1201;
  o.bias = {0.0, 0.8};
  const auto arc = solve_connection(spec, o);
  CHECK(arc.curve.at((arc.curve.N - 1) / 2)[1] > 0.5);
  const auto rep = hyperbolicity(arc, spec);
  CHECK(rep.eta > 0.0);
  CHECK(arc.action < 2 * kSqrt2 / 3);

  o.bias.clear();
  const auto straight = solve_connection(spec, o);
  double off = 0.0;
  for (int i = 0; i < straight.curve.N; ++i) off = std::max(off, std::abs(straight.curve.at(i)[1]));
  CHECK(off == 0.0);
  // Transverse mode: -v'' + (2 gamma - sech^2(s / sqrt2)) v has ground energy 2 gamma - 1/2.
  CHECK_THROWS_AS(hyperbolicity(straight, spec), NotHyperbolic);
  const auto soft = hyperbolicity(straight, spec, false);
  CHECK(std::abs(soft.eta - (2 * gamma - 0.5)) <= 5e-3);
}

TEST_CASE("solver preconditions") {
  CHECK_THROWS_AS(solve_connection(PotentialSpec::power({{-1.0}, {1.0}}, 1.5)), UnsupportedAlpha);
  auto lop = PotentialSpec::product({{-1.0}, {2.0}});
  CHECK_THROWS_AS(solve_connection(lop), std::invalid_argument);
  ConnectionOptions o;
  o.max_iters = 3;
  CHECK_THROWS_AS(solve_connection(PotentialSpec::two_well(), o), NoConvergence);
}

TEST_CASE("effective potential and admissibility") {
  const auto spec = PotentialSpec::two_well();
  const auto e = scalar_connection(10.0, 1001);
  const auto at_e = effective_potential(e.curve, e, spec);
  CHECK(at_e.value == 0.0);
  CHECK(at_e.q == 0.0);
  Curve bent = e.curve;
  for (int i = 0; i < bent.N; ++i) bent.at(i)[0] += 0.1 * std::sin(std::numbers::pi * bent.s(i) / bent.L);
  const auto w = effective_potential(bent, e, spec);
  CHECK(w.value > 0.0);
  CHECK(std::abs(norm(w.nu) - 1.0) <= 1e-12);
  Curve skew = e.curve;
  skew.at(300)[0] += 0.01;
  CHECK_THROWS_AS(effective_potential(skew, e, spec), NonAdmissible);
  Curve shifted = e.curve;
  shifted.at(0)[0] = -0.5;
  shifted.at(shifted.N - 1)[0] = 0.5;
  CHECK_THROWS_AS(effective_potential(shifted, e, spec), NonAdmissible);
}

TEST_CASE("second q-derivative of the effective potential") {
  const auto spec = PotentialSpec::two_well();
  const auto e = scalar_connection(10.0, 1001);
  WqqOptions o;
  o.directions = 8;
  o.q_scan = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  const auto rep = wqq_check(e, spec, o);
  REQUIRE(rep.dqq0.size() == 8);
  for (std::size_t d = 0; d < rep.dqq0.size(); ++d) {
    CHECK(std::abs(rep.dqq0[d] - rep.form0[d]) <= 1e-3 * rep.form0[d]);
    CHECK(rep.form0[d] >= rep.eta * (1 - 1e-9));
  }
  CHECK(rep.q_bar > 0.0);
  CHECK(rep.lambda_star == rep.q_bar);
  CHECK(std::abs(rep.c0 - rep.eta / 2) <= 1e-15);
  CHECK(rep.richardson_gap <= 1e-3);

  // Along the eigenvector the quadratic form equals eta.
  const auto hyp = hyperbolicity(e, spec);
  CHECK(std::abs(quadratic_form(e, spec, hyp.eigenvector) - hyp.eta) <= 1e-4 * hyp.eta);
}

TEST_CASE("interpolation inequalities") {
  Curve g;
  g.L = 10;
  g.N = 2001;
  g.values.resize(g.N);
  for (int i = 0; i < g.N; ++i) g.values[i] = std::exp(-g.s(i) * g.s(i));
  const auto b = interp_bound_check(g);
  CHECK(b.holds);
  // Gaussian: |f|^2 = sqrt(pi/2), |f_s|^2 = sqrt(pi/2), sup |f_s| = sqrt(2/e).
  CHECK(std::abs(b.l2 - std::pow(std::numbers::pi / 2, 0.25)) <= 1e-6);
  CHECK(std::abs(b.l2_derivative - std::pow(std::numbers::pi / 2, 0.25)) <= 1e-3);
  CHECK(std::abs(b.sup_derivative - std::sqrt(2 / std::numbers::e)) <= 1e-3);

  // Invariant under f -> c f(s / a) up to the same factor on both sides.
  Curve s = g;
  for (int i = 0; i < s.N; ++i) s.values[i] = 3 * std::exp(-std::pow(s.s(i) / 2, 2));
  const auto bs = interp_bound_check(s);
  CHECK(bs.holds);
  CHECK(std::abs(bs.sup / bs.sqrt2_bound - b.sup / b.sqrt2_bound) <= 1e-3);

  Curve z = g;
  std::fill(z.values.begin(), z.values.end(), 0.0);
  const auto bz = interp_bound_check(z);
  CHECK(bz.holds);
  CHECK(bz.sup == 0.0);
}

TEST_CASE("cylinder polar data") {
  const auto spec = PotentialSpec::two_well();
  const auto e = scalar_connection(6.0, 121);
  const double h = e.curve.h();
  const Grid g = Grid::make(2, {e.curve.N, 41, 1}, h, {-6.0, -2.0, 0.0});
  const Field u = extend_connection(e, g);
  const auto p = cyl_polar(u, e, spec);
  for (std::size_t y = 0; y < p.q.size(); ++y) {
    CHECK(p.q[y] == 0.0);
    CHECK(p.w[y] == 0.0);
  }
  CHECK(std::abs(p.modified_energy) <= 1e-12);
  CHECK(std::abs(p.direct_energy) <= 1e-9);

  const Grid bad = Grid::make(2, {e.curve.N + 2, 11, 1}, h, {-6.0 - h, -2.0, 0.0});
  CHECK_THROWS_AS(cyl_polar(Field(bad, 1), e, spec), TruncationMismatch);
  CHECK_THROWS_AS(cyl_polar(Field(g, 2), e, spec), TruncationMismatch);
}

TEST_CASE("cylinder split converges at second order") {
  const auto spec = PotentialSpec::two_well();
  std::vector<double> gap;
  for (int N : {61, 121, 241}) {
    ConnectionOptions o;
    o.L = 6.0;
    o.N = N;
    o.tol = 1e-8;
    const auto e = solve_connection(spec, o);
    const double h = e.curve.h();
    const int ny = static_cast<int>(std::lround(4.0 / h)) + 1;
    const Grid g = Grid::make(2, {N, ny, 1}, h, {-6.0, -2.0, 0.0});
    Field u(g, 1);
    // Interface shifted by a smooth y-dependent amount that never vanishes.
    u.assign([](const auto& x, std::span<double> v) {
      v[0] = std::tanh((x[0] - 0.3 - 0.2 * std::sin(x[1])) / kSqrt2);
    });
    // Pin the s-ends to the wells so each slice is admissible.
    const std::size_t st = g.stride(0);
    for (std::size_t y = 0; y < st; ++y) {
      u.at(y)[0] = -1.0;
      u.at((N - 1) * st + y)[0] = 1.0;
    }
    const auto p = cyl_polar(u, e, spec);
    gap.push_back(std::abs(p.modified_energy - p.direct_energy));
  }
  const double o1 = std::log2(gap[0] / gap[1]), o2 = std::log2(gap[1] / gap[2]);
  CHECK(o1 >= 1.8);
  CHECK(o2 >= 1.8);
}

TEST_CASE("cylinder density scan and product probe") {
  const auto spec = PotentialSpec::two_well();
  const auto e = scalar_connection(6.0, 121);
  const double h = e.curve.h();
  const int ny = 81;
  const Grid g = Grid::make(2, {e.curve.N, ny, 1}, h, {-6.0, -8.0, 0.0});
  Field u = extend_connection(e, g);
  const auto rigid = product_structure_probe(u, e);
  CHECK(rigid.rigid);
  CHECK_FALSE(rigid.fitted);

  // Translate slices near the y-ends; the interior relaxes to e.
  const std::size_t st = g.stride(0);
  for (int j = 0; j < ny; ++j) {
    const double y = g.origin[1] + j * h;
    const double shift = 0.5 * std::exp(-std::sqrt(1.5) * (8.0 - std::abs(y)));
    for (int i = 1; i + 1 < e.curve.N; ++i)
      u.at(i * st + j)[0] = shifted(e.curve, e.curve.s(i) - shift);
  }
  const auto probe = product_structure_probe(u, e, 0.1, 1e-5);
  CHECK_FALSE(probe.rigid);
  REQUIRE(probe.fitted);
  CHECK(std::abs(probe.k - std::sqrt(1.5)) <= 0.05);

  const auto rep = cyl_density_scan(u, e, spec, {0.0, 0.0, 0.0}, {1.0, 2.0, 4.0, 7.0}, 0.05);
  REQUIRE(rep.V.size() == 4);
  CHECK(rep.V[0] == 0.0);
  for (std::size_t i = 1; i < rep.J.size(); ++i) CHECK(rep.J[i] >= rep.J[i - 1]);
  CHECK(rep.V[3] > 0.0);
}

TEST_CASE("level crossing interpolates along y") {
  CylPolar p;
  p.ygrid = Grid::make(1, {5, 1, 1}, 0.5, {-1.0, 0.0, 0.0});
  p.q = {2.0, 1.5, 1.0, 0.5, 0.0};
  CHECK(level_crossing(p, 1.25) == doctest::Approx(-0.25).epsilon(1e-14));
  CHECK(level_crossing(p, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(level_crossing(p, 3.0), CheckFailed);
}

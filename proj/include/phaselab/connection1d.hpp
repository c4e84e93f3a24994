#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "phaselab/density.hpp"
#include "phaselab/grid_field.hpp"
#include "phaselab/potentials.hpp"

namespace phaselab {

/// Sampled curve on s_i = -L + i h, i = 0..N-1, h = 2L / (N - 1); m values per node.
struct Curve {
  double L = 1.0;
  int N = 3;
  int m = 1;
  std::vector<double> values;

  double h() const { return 2.0 * L / (N - 1); }
  double s(int i) const { return -L + i * h(); }
  std::span<double> at(int i) { return {values.data() + static_cast<std::size_t>(i) * m, static_cast<std::size_t>(m)}; }
  std::span<const double> at(int i) const {
    return {values.data() + static_cast<std::size_t>(i) * m, static_cast<std::size_t>(m)};
  }
};

/// Heteroclinic connection from a_- = hat(a_+) to a_+, symmetric under
/// v(-s) = hat(v(s)) where hat negates the first component.
struct ConnectionProfile {
  Curve curve;
  std::vector<double> a_minus;
  std::vector<double> a_plus;
  double action = 0.0;
  double residual = 0.0;  // max |e_ss - W_u(e)| on interior nodes
  double k = 0.0;         // tail fit |e - a_+| ~ K exp(-k s) on [L/2, L]
  double K = 0.0;
  long iterations = 0;
  bool symmetric = true;
};

struct ConnectionOptions {
  double L = 10.0;
  int N = 2001;         // odd
  double dt = 0.5;      // semi-implicit step
  double tol = 1e-9;    // residual target
  long max_iters = 100000;
  // Even bump amplitude added to each component of the initial guess; a
  // nonzero entry on an even component steers away from straight paths.
  std::vector<double> bias;
};

/// Minimizes the discrete Action in the symmetric class with v(+-L) = a_+-.
/// Throws NoConvergence, TruncationTooShort when the tail decays slower than
/// half the linear rate at a_+, and std::invalid_argument for potentials
/// without the reflection symmetry.
ConnectionProfile solve_connection(const PotentialSpec& spec, const ConnectionOptions& opts = {});

struct ActionValue {
  double value = 0.0;
  bool admissible = false;  // endpoints within 1e-6 of a_-, a_+
};

/// Trapezoidal Action: sum over edges of |dv|^2 / (2h) plus the trapezoid rule on W.
ActionValue action(const Curve& v, const PotentialSpec& spec, std::span<const double> a_minus,
                   std::span<const double> a_plus);
double action(const ConnectionProfile& e, const PotentialSpec& spec);

/// max |v(-s) - hat(v(s))| over nodes.
double reflection_defect(const Curve& v);

/// L^2 inner product and norm over s by the trapezoid rule.
double inner(const Curve& a, const Curve& b);
double norm(const Curve& a);

struct EffectivePotentialEval {
  double value = 0.0;  // A(v) - A(e)
  double q = 0.0;      // |v - e| in L^2
  Curve nu;            // (v - e) / q, zero when q <= q_min
};

/// Throws NonAdmissible when v breaks the symmetry or the limits, or lives on another grid.
EffectivePotentialEval effective_potential(const Curve& v, const ConnectionProfile& e, const PotentialSpec& spec);

struct HyperbolicityReport {
  double eta = 0.0;
  Curve eigenvector;  // full-line, unit L^2 norm, in the symmetric class
  int iterations = 0;
  int unknowns = 0;
  bool hyperbolic = false;
};

/// Smallest eigenvalue of T v = -v'' + W_uu(e) v on the symmetric class with
/// v(+-L) = 0, from the half-line reduction by shifted inverse iteration.
/// Throws NotHyperbolic when eta <= 0 and `require` is set, and
/// UnsupportedAlpha for sub-quadratic wells.
HyperbolicityReport hyperbolicity(const ConnectionProfile& e, const PotentialSpec& spec, bool require = true);
/// Same with W_uu(e(s)) supplied per node as m x m row-major blocks.
HyperbolicityReport hyperbolicity(const ConnectionProfile& e, const std::vector<double>& hessians,
                                  bool require = true);

/// <T nu, nu> with the Action's quadrature.
double quadratic_form(const ConnectionProfile& e, const PotentialSpec& spec, const Curve& nu);

struct WqqOptions {
  int directions = 16;
  std::vector<double> q_scan;  // empty selects 0, 0.025, ..., 1
  double delta = 0.0;          // 0 selects 1e-3 times the largest scanned q
  std::uint64_t seed = 0;
};

struct WqqReport {
  double eta = 0.0;
  double c0 = 0.0;     // eta / 2
  double q_bar = 0.0;  // largest scanned q with D_qq W >= c0 on every direction up to it
  double lambda_star = 0.0;
  double m1 = 0.0;     // max over directions of |nu_s| times the largest q scanned
  std::vector<double> q_scan;
  std::vector<double> inf_dqq;    // min over directions per q
  std::vector<double> dqq0;       // D_qq W at q = 0 per direction
  std::vector<double> form0;      // <T nu, nu> per direction
  double richardson_gap = 0.0;    // max |D(delta) - D(delta / 2)| at q = 0
};

/// Random smooth unit directions in the symmetric class.
std::vector<Curve> random_directions(const ConnectionProfile& e, int count, std::uint64_t seed);

/// D_qq W(e + q nu) by second differences over sampled directions.
WqqReport wqq_check(const ConnectionProfile& e, const PotentialSpec& spec, const WqqOptions& opts = {});

struct InterpBound {
  double sup = 0.0;
  double l2 = 0.0;
  double l2_derivative = 0.0;
  double sup_derivative = 0.0;
  double sqrt2_bound = 0.0;    // sqrt2 |f|^{1/2} |f_s|^{1/2}
  double two_thirds_bound = 0.0;  // (3 sup |f_s|)^{1/3} |f|^{2/3}
  bool holds = false;
};

/// Both interpolation inequalities for f given by its samples (zero outside [-L, L]).
InterpBound interp_bound_check(const Curve& f);

/// Per-y data of u(s, y) relative to e, where axis 0 of the grid is s.
struct CylPolar {
  Grid ygrid;               // axes 1.. of the field grid as an (n-1)-D grid
  std::vector<double> q;    // |u(., y) - e| in L^2(s)
  std::vector<double> w;    // W(u(., y)) = A(u(., y)) - A(e)
  std::vector<double> density;  // nodal 1/2 |grad_y q|^2 + 1/2 q^2 |grad_y nu|^2 + W, central differences
  std::vector<Curve> nu;
  double modified_energy = 0.0;  // y-integral of the split density, cell quadrature
  double direct_energy = 0.0;    // energy(u) on the full field minus A(e) |y-domain|
};

/// Throws TruncationMismatch when axis 0 does not match e's nodes.
CylPolar cyl_polar(const Field& u, const ConnectionProfile& e, const PotentialSpec& spec);

/// First y (1-D y-domain, increasing) where q falls through `lambda`, linearly
/// interpolated. Throws CheckFailed when q never crosses it.
double level_crossing(const CylPolar& p, double lambda);

/// Density quantities over balls B_R(y0) of the y-domain: V = |{q > lambda}|,
/// A = int over {q <= lambda} of W, J = modified energy.
DensityReport cyl_density_scan(const Field& u, const ConnectionProfile& e, const PotentialSpec& spec,
                               std::array<double, 3> y0, const std::vector<double>& radii, double lambda);

struct ProductProbe {
  double max_deviation = 0.0;  // sup over (s, y) of |u - e|
  bool rigid = false;          // max_deviation <= 1e-6
  bool fitted = false;
  double k = 0.0;              // sup_s |u(s, y) - e(s)| ~ K exp(-k d(y, boundary))
  double K = 0.0;
  double residual = 0.0;
};

ProductProbe product_structure_probe(const Field& u, const ConnectionProfile& e, double lambda = 0.1,
                                     double floor = 1e-7);

/// e(s) copied along the y-axes, with the field's default mask.
Field extend_connection(const ConnectionProfile& e, const Grid& grid);

}  // namespace phaselab

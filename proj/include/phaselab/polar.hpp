#pragma once

#include <array>
#include <memory>
#include <vector>

#include "phaselab/grid_field.hpp"
#include "phaselab/potentials.hpp"

namespace phaselab {

/// u = a + q nu with q = |u - a|; nu = 0 where q <= q_min.
struct PolarDecomposition {
  Grid grid;
  int m = 1;
  std::vector<double> well;
  std::vector<double> q;
  std::vector<double> nu;  // m per node
  std::vector<NodeTag> mask;

  std::span<const double> direction(std::size_t node) const {
    return {nu.data() + node * m, static_cast<std::size_t>(m)};
  }
  /// q and the m direction channels packed as one field (m <= 3).
  Field to_field() const;
  /// a + q nu, nodewise.
  Field reconstruct() const;
};

PolarDecomposition to_polar(const Field& f, std::span<const double> well, double q_min = kQMin);

struct EnergySplit {
  double grad_q = 0.0;     // int |grad q|^2
  double q2_grad_nu = 0.0; // int q^2 |grad nu|^2, nu-gradient zeroed on edges touching nu = 0
  double potential = 0.0;  // int W(u)
  double omitted = 0.0;    // int |grad u|^2 - |grad q|^2 on the zeroed edges
  /// 1/2 grad_q + 1/2 q2_grad_nu + potential.
  double total() const { return 0.5 * grad_q + 0.5 * q2_grad_nu + potential; }
};

/// Polar kinetic split with the same cell quadrature as energy(). On an edge
/// the nu term uses the arithmetic mean of q, so the split differs from the
/// direct kinetic energy by 1/4 (dq)^2 |dnu|^2 per edge, an O(h^2) mismatch.
EnergySplit energy_split(const Field& f, std::span<const double> well, const RegionMask& region,
                         const PotentialSpec& spec);

enum class ProfileKind { Power, Helmholtz };

/// Radial solution of phi'' + (n-1)/r phi' = c1 phi on [0, R], phi'(0) = 0,
/// phi(R) = 1, sampled on `nodes` equally spaced radii.
struct HelmholtzProfile {
  int n = 1;
  double R = 1.0;
  double c1 = 1.0;
  std::vector<double> r;
  std::vector<double> phi;
  double c2 = 0.0;  // largest c with phi(r) <= exp(-c (R - r)) on [0, R)
  double value(double radius) const;
};

/// Second-order tridiagonal solve on `nodes` and 2 nodes - 1 radii combined by
/// Richardson extrapolation.
HelmholtzProfile helmholtz_profile(double R, double c1, int n, int nodes = 10001);

struct ComparisonProfile {
  ProfileKind kind = ProfileKind::Power;
  std::array<double, 3> center{0.0, 0.0, 0.0};
  double R = 1.0;
  double T = 1.0;      // power: q^h vanishes on B_{R-T}
  double M = 1.0;      // q^h = M on the sphere |x - center| = R
  double tau = 1.0;    // power: exponent 2 / (2 - tau)
  double c1 = 1.0;     // helmholtz
  std::shared_ptr<const HelmholtzProfile> radial;

  /// tau = max(alpha, 1). Throws UnsupportedAlpha when tau = 2 (use the
  /// helmholtz profile).
  static ComparisonProfile power(std::array<double, 3> center, double R, double T, double alpha, double M);
  /// Power profile with tau in [0, 2) given directly.
  static ComparisonProfile power_tau(std::array<double, 3> center, double R, double T, double tau, double M);
  static ComparisonProfile helmholtz(std::array<double, 3> center, double R, double c1, double M, int n,
                                     int nodes = 10001);

  double exponent() const;  // 2 / (2 - tau)
  double H() const;         // M / T^exponent
  /// q^h at distance r from the center; +infinity outside B_R.
  double value(double r) const;
};

struct Comparison {
  Field sigma;
  std::vector<double> q_h;
  std::vector<double> q_sigma;
  std::vector<double> beta;  // min(q^u - q^sigma, lambda) on B_R, 0 elsewhere
  double lambda = 0.0;
};

/// sigma = a + min(q^h, q^u) nu^u on B_R and sigma = u outside.
Comparison build_comparison(const Field& f, std::span<const double> well, const ComparisonProfile& profile,
                            double lambda);

struct ProfileCheck {
  double c1 = 0.0;           // smallest C1 with Lap q^h <= C1 (q^h)^(tau - 1) on the annulus nodes
  double c1_analytic = 0.0;  // H^(2 - tau) p (p - 1 + (n - 1) T / R)
  double inner_gradient = 0.0;  // one-sided slope at |x| = R - T, O(h^(p - 1))
  int nodes = 0;
  double worst_radius = 0.0;
};

/// Checks the power profile on a radial grid of `nodes` points over [R - T, R]
/// using the n-dimensional radial Laplacian. When c1_claim > 0, throws
/// CheckFailed at the first radius violating Lap q^h <= c1_claim (q^h)^(tau-1).
ProfileCheck power_profile_check(const ComparisonProfile& profile, int n, int nodes = 2001,
                                 double c1_claim = 0.0);

struct IdentityReport {
  double lhs = 0.0;       // 1/2 int (|grad q^u|^2 - |grad q^sigma|^2)
  double j_u = 0.0;
  double j_sigma = 0.0;
  double nu_term = 0.0;   // 1/2 int ((q^sigma)^2 - (q^u)^2) |grad nu^u|^2
  double w_term = 0.0;    // int (W(sigma) - W(u))
  double rhs = 0.0;       // j_u - j_sigma + nu_term + w_term
  double mismatch = 0.0;  // lhs - rhs
  double tol = 0.0;
  bool inequality = false;  // lhs <= w_term + tol
};

/// Both sides of the polar energy identity for a comparison map sigma of u.
/// `tol` is the slack allowed in the inequality verdict (use the audit tolerance).
IdentityReport verify_identity(const Field& u, const Field& sigma, std::span<const double> well,
                               const RegionMask& region, const PotentialSpec& spec, double tol = 0.0);

}  // namespace phaselab

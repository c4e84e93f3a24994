#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace phaselab {

/// Shared dead-zone threshold: below this distance to a well the direction
/// field is undefined and non-Lipschitz gradients are not evaluated.
inline constexpr double kQMin = 1e-8;
inline constexpr int kMaxComponents = 4;

enum class PotentialForm {
  ProductQuartic,  // scale * prod_j |u - a_j|^2 (alpha = 2)
  PowerProduct,    // scale * prod_j |u - a_j|^alpha, 0 < alpha <= 2
  Ring,            // scale * (1/4 (|u|^2 - 1)^2 + anisotropy * u_2^2), m = 2
};

/// Gaussian term amplitude * exp(-|u - center|^2 / width^2) added to W. Used
/// to build counterexamples for the hypothesis checker.
struct Bump {
  std::vector<double> center;
  double amplitude = 0.0;
  double width = 1.0;
};

struct PotentialSpec {
  int m = 1;
  std::vector<std::vector<double>> wells;
  double alpha = 2.0;
  PotentialForm form = PotentialForm::ProductQuartic;
  double scale = 1.0;
  double anisotropy = 0.0;
  bool symmetric = false;
  std::vector<Bump> bumps;
  double q_min = kQMin;

  /// W(u) = 1/4 (1 - u^2)^2 on the real line.
  static PotentialSpec two_well();
  static PotentialSpec product(std::vector<std::vector<double>> wells, double scale = 1.0);
  static PotentialSpec power(std::vector<std::vector<double>> wells, double alpha,
                             double scale = 1.0);
  /// Wells (+-1, 0). For small anisotropy the two arcs of the unit circle are
  /// cheaper than the straight segment, giving two distinct connections.
  static PotentialSpec ring(double anisotropy, double scale = 1.0);

  /// Throws std::invalid_argument on inconsistent fields.
  void validate() const;
  /// True when the well set is invariant under negating the first coordinate.
  bool wells_reflection_invariant() const;
  std::string form_name() const;
};

double eval_w(const PotentialSpec& spec, std::span<const double> u);

/// Writes W_u(u) into `out`. Throws DegenerateGradient for alpha < 2 when u is
/// within q_min of a well.
void eval_w_grad(const PotentialSpec& spec, std::span<const double> u, std::span<double> out);
std::vector<double> eval_w_grad(const PotentialSpec& spec, std::span<const double> u);

/// Row-major m x m Hessian. Throws UnsupportedAlpha when alpha < 2.
void eval_w_hess(const PotentialSpec& spec, std::span<const double> u, std::span<double> out);
std::vector<double> eval_w_hess(const PotentialSpec& spec, std::span<const double> u);

/// Index of the nearest well and the distance to it.
std::pair<int, double> nearest_well(const PotentialSpec& spec, std::span<const double> u);

/// Minimum over unit vectors of v.H v for the symmetric m x m matrix H.
double smallest_symmetric_eigenvalue(std::span<const double> h, int m);

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
};

/// Bounding box of the wells padded by `pad` on every side.
Box default_box(const PotentialSpec& spec, double pad = 0.5);

struct HypothesisOptions {
  int directions = 64;
  int radii = 32;
  double rho0 = 0.0;  // 0 selects min(1, separation/4)
  std::uint64_t seed = 0;
};

struct WellEstimate {
  std::vector<double> well;
  double value = 0.0;           // W(a_j), should be exactly 0
  double c_star = 0.0;          // inf of W_u(a + rho nu).nu / rho^(alpha-1)
  double c0 = 0.0;              // inf of nu.W_uu(a)nu, alpha = 2 only
  double worst_rho = 0.0;
  std::vector<double> worst_direction;
};

struct HypothesisReport {
  int samples = 0;
  double rho0 = 0.0;
  bool nonnegative = true;
  double min_sampled_value = 0.0;
  double positivity_gap = 0.0;  // min W over samples farther than rho0 from every well
  std::vector<WellEstimate> wells;
  bool symmetry_checked = false;
  bool symmetric = false;
  double symmetry_defect = 0.0;
};

/// Samples `box` and rays around each well. Throws HypothesisViolated naming
/// the first failing sample when W < 0, W vanishes off the wells, or the
/// radial derivative bound has no positive constant.
HypothesisReport check_hypotheses(const PotentialSpec& spec, const Box& box, int samples,
                                  const HypothesisOptions& opts = {});

/// Degenerate geodesic distance inf int sqrt(2W(z)) |z'| approximated by a
/// shortest path on a u-space lattice of step `resolution` (8-connected for
/// m = 2, 26-connected for m = 3, exact composite midpoint rule for m = 1).
/// `box` defaults to default_box(spec) enlarged to contain z1 and z2.
double geodesic_distance(const PotentialSpec& spec, std::span<const double> z1,
                         std::span<const double> z2, double resolution,
                         const Box* box = nullptr);

}  // namespace phaselab

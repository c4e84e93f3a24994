#pragma once

#include <array>
#include <utility>
#include <vector>

#include "phaselab/grid_field.hpp"
#include "phaselab/potentials.hpp"

namespace phaselab {

struct ScanOptions {
  double shell_width = 0.0;  // T; 0 selects 2 h
  double lambda_star = 0.0;  // threshold for the shell measures; 0 reuses lambda
  double eps = 1.0;
};

/// Density and energy quantities of a field on concentric balls.
struct DensityReport {
  int n = 2;
  double h = 0.0;
  std::array<double, 3> center{0.0, 0.0, 0.0};
  double lambda = 0.0;
  double lambda_star = 0.0;
  std::vector<double> radii;
  std::vector<double> V;  // |B_R ∩ {q > lambda}|
  std::vector<double> A;  // int over B_R ∩ {q <= lambda} of W(u)
  std::vector<double> J;  // energy on B_R
  std::vector<double> cell_layer_bound;
  // Per radius, the two wells with the largest |B_R ∩ {|u - a_j| < lambda}|.
  std::vector<std::pair<int, int>> dominant;

  double T = 0.0;
  std::vector<double> V_shell;  // V_{kT}, k = 1..K
  std::vector<double> A_shell;  // A_{kT}
  std::vector<double> omega;    // |(B_{jT} \ B_{(j-1)T}) ∩ {q > lambda_star}|, j = 1..K
};

/// Throws OutOfDomain when a ball leaves the active part of the grid.
DensityReport scan(const Field& f, std::span<const double> well, std::array<double, 3> center,
                   const std::vector<double>& radii, double lambda, const PotentialSpec& spec,
                   const ScanOptions& opts = {});

struct ExponentFit {
  double exponent = 0.0;
  double intercept = 0.0;  // log of the prefactor
  std::array<double, 2> window{0.0, 0.0};
  double residual = 0.0;   // max |log value - fit|
  int used = 0;
  int excluded = 0;        // nonpositive values inside the window
};

/// Least squares slope of log(value) against log(R) for R in [window[0], window[1]].
/// Throws DegenerateWindow with fewer than 4 usable points.
ExponentFit fit_exponent(const std::vector<double>& values, const std::vector<double>& radii,
                         std::array<double, 2> window);

struct SchemeReport {
  // C (V_{R-T}^{(n-1)/n} + V_{R-T}) <= (V_R - V_{R-T}) + (A_R - A_{R-T}) at R = kT.
  std::vector<double> scheme_lhs;  // without the constant
  std::vector<double> scheme_rhs;
  double c_lambda = 0.0;  // largest admissible constant; +inf when vacuous
  // C0 (sum_{j<=k} omega_j)^{(n-1)/n} <= sum_{j<=k} e^{-c2 j T} omega_{k+1-j} + omega_{k+1}.
  std::vector<double> shell_lhs;
  std::vector<double> shell_rhs;
  double c2 = 0.0;
  double c0 = 0.0;
  // Induction threshold (C0 / (2^{n+1} n^{(n-1)/n}))^n and whether the shells
  // satisfy omega_k >= threshold k^{n-1}.
  double claim_threshold = 0.0;
  bool claim_holds = false;
  bool vacuous = false;
  bool pass = false;
};

/// Both difference inequalities on the shells of `report`, with the largest
/// constants that make every inequality hold. PASS iff both are positive.
SchemeReport difference_scheme_check(const DensityReport& report, double c2);

struct LiouvilleReport {
  std::vector<double> depth;  // distance to the boundary
  std::vector<double> sup;    // sup |u - a| over interior nodes at distance >= depth
  double innermost = 0.0;
  double overall = 0.0;
  bool constant = false;      // innermost <= 1e-6
};

/// sup |u - a| as a function of the distance from the non-interior nodes.
LiouvilleReport liouville_probe(const Field& f, std::span<const double> well, int depths = 8);

struct DecayOptions {
  double lambda = 0.1;   // only depths where the sup falls below this are fitted
  double floor = 1e-7;   // and stays above this
  double bin = 0.0;      // distance bin width; 0 selects h
};

struct DecayFit {
  double k = 0.0;  // |u - a| ~ K exp(-k d)
  double K = 0.0;
  double residual = 0.0;
  std::array<double, 2> window{0.0, 0.0};
  int points = 0;
};

/// Fits log sup_{d(x) = d} |u - a| against d. `distance` gives d per node.
/// Throws NoDecayWindow when fewer than 3 distance bins fall in the window.
DecayFit exp_decay_probe(const Field& f, std::span<const double> well, const std::vector<double>& distance,
                         const DecayOptions& opts = {});
/// Same with the distance to the Dirichlet nodes.
DecayFit exp_decay_probe(const Field& f, std::span<const double> well, const DecayOptions& opts = {});

struct LowerBoundReport {
  double c = 0.0;  // min over radii of J_R / R^{n-1}
  bool monotone = true;     // J_R / R^{n-2} nondecreasing up to the cell-layer tolerance
  double worst_drop = 0.0;  // largest relative decrease seen
  int violation = -1;       // radius index where monotonicity failed
  bool skipped = false;     // constant field
  bool pass = false;
};

LowerBoundReport lower_bound_check(const DensityReport& report);

}  // namespace phaselab

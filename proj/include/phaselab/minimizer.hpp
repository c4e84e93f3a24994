#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "phaselab/grid_field.hpp"
#include "phaselab/potentials.hpp"

namespace phaselab {

enum class DtRule { Fixed, Adaptive };

struct DescentSchedule {
  double dt0 = 0.0;  // 0 selects the stability bound h^2 / (2 n eps^2)
  DtRule dt_rule = DtRule::Adaptive;
  double tol = 1e-8;
  long max_iters = 1'000'000;
  std::uint64_t seed = 0;
  long log_every = 100;
};

/// Largest admissible explicit step h^2 / (2 n eps^2).
double stability_bound(const Grid& g, double eps);

struct LogRow {
  long iter = 0;
  double dt = 0.0;
  double energy = 0.0;
  double residual = 0.0;
};

struct ConvergenceLog {
  std::vector<LogRow> rows;
  std::string to_csv() const;
};

struct DescentResult {
  Field field;
  ConvergenceLog log;
  bool converged = false;
  long iterations = 0;
  long rejected = 0;
  double energy = 0.0;
  double residual = 0.0;
  std::size_t pinned = 0;  // dead-core nodes at exit (alpha < 2)
  std::string stop_reason;
};

/// Explicit gradient flow u <- u + dt (eps^2 Lap u - W_u(u)) with Dirichlet
/// nodes frozen. The adaptive rule halves dt when the discrete energy would
/// rise and grows it by 1.1 (up to the stability bound) otherwise, so accepted
/// energies never increase. Never throws NoConvergence: check `converged`.
DescentResult descend(const Field& f0, const PotentialSpec& spec, const DescentSchedule& sched,
                      double eps = 1.0);

/// Like descend, but every iterate is projected onto u(x^) = R u(x), where x^
/// negates the first spatial coordinate and R the first component. Requires a
/// symmetric potential and a grid and mask symmetric about x_1 = 0.
DescentResult descend_symmetric(const Field& f0, const PotentialSpec& spec,
                                const DescentSchedule& sched, double eps = 1.0);

/// Orthogonal projection onto the symmetry class; exact on symmetric input.
void project_symmetric(Field& f);
/// max |u(x^) - R u(x)| over active nodes.
double symmetry_defect(const Field& f);

struct MultistartResult {
  std::vector<DescentResult> runs;
  std::vector<double> energies;
  std::size_t best = 0;  // lowest energy, ties to the lowest index
};

/// Runs descend from init(k) for k = 0..starts-1 and keeps the lowest energy.
/// Starts run concurrently when more than one thread is configured.
MultistartResult multistart(const std::function<Field(std::uint64_t)>& init, const PotentialSpec& spec,
                            const DescentSchedule& sched, int starts = 8, double eps = 1.0);

/// Seeded start: f0 plus independent uniform noise in [-amplitude, amplitude]
/// on each interior component.
Field noisy_start(const Field& f0, double amplitude, std::uint64_t seed);

struct MinimalityAudit {
  int trials = 100;
  double radius = 1.0;
  double amplitude = 1e-3;
  double tol_rel = 1e-8;  // tol_audit = tol_rel * J(u)
  std::uint64_t seed = 0;
};

struct AuditReport {
  std::vector<double> delta;  // J(u + v) - J(u) per trial
  double min_delta = 0.0;
  double tol = 0.0;
  double energy = 0.0;
  double radius = 0.0;
  bool pass = true;
};

/// Adds smooth compactly supported bumps v, vanishing off the interior nodes,
/// and reports the energy change of each. PASS iff min delta >= -tol.
AuditReport audit_minimality(const Field& f, const PotentialSpec& spec, const MinimalityAudit& audit,
                             double eps = 1.0);

}  // namespace phaselab

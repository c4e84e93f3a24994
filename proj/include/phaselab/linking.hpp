#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "phaselab/grid_field.hpp"
#include "phaselab/minimizer.hpp"
#include "phaselab/potentials.hpp"

namespace phaselab {

using Point2 = std::array<double, 2>;

struct Segment {
  Point2 a;
  Point2 b;
};

/// Polyline pieces of {|u - a| = gamma}, one or two per grid cell.
struct LevelSet {
  double gamma = 0.0;
  double epsilon = 0.0;
  std::vector<Segment> segments;

  double length() const;
  std::string to_csv() const;
};

enum class ReferenceKind { ChordInDisk, SegmentInRectangle };

/// Straight interface joining the two boundary transition points.
struct ReferencePartition {
  ReferenceKind kind = ReferenceKind::ChordInDisk;
  Point2 p1{0.0, 0.0};
  Point2 p2{0.0, 0.0};
  Point2 center{0.0, 0.0};  // disk center
  double radius = 0.0;      // disk radius

  /// Chord between the boundary points at angles t1, t2.
  static ReferencePartition chord(Point2 center, double radius, double t1, double t2);
  static ReferencePartition segment(Point2 p1, Point2 p2);
  double distance(const Point2& x) const;
};

/// Disk of `radius` on a square grid with spacing h, Dirichlet ring holding
/// `inside` on the boundary arc with angles in (t1, t2) and `outside` elsewhere.
/// The interior starts from the same angular split.
Field two_arc_disk(double radius, double h, double t1, double t2, const std::vector<double>& inside,
                   const std::vector<double>& outside);

struct ContinuationStep {
  double epsilon = 0.0;
  Field field;
  bool converged = false;
  long iterations = 0;
  double energy = 0.0;
  double residual = 0.0;
  std::string stop_reason;
};

struct ContinuationOptions {
  int starts = 1;            // extra starts add noise of `amplitude` to the warm start
  double amplitude = 0.05;
  std::uint64_t seed = 0;
  bool warm_start = true;
};

/// Minimizes the eps-scaled energy for each eps of a decreasing schedule,
/// warm-starting from the previous result. Non-converged steps are kept
/// with converged = false.
std::vector<ContinuationStep> eps_continuation(const Field& f0, const std::vector<double>& eps_schedule,
                                               const PotentialSpec& spec, const DescentSchedule& sched,
                                               const ContinuationOptions& opts = {});

/// Marching squares on |u - a| - gamma over cells with four active corners.
/// Saddle cells are split by the sign of the corner average. Throws
/// EmptyLevelSet when nothing crosses.
LevelSet extract_levelset(const Field& f, std::span<const double> well, double gamma);

struct HausdorffReport {
  double distance = 0.0;      // symmetric
  double to_reference = 0.0;  // sup over the level set of the distance to the reference
  double from_reference = 0.0;
  int samples = 0;
};

/// Symmetric Hausdorff distance with both curves sampled at `step`. Points
/// farther than radius - margin from the disk center are dropped (margin 0
/// keeps everything; rectangles ignore the margin).
HausdorffReport hausdorff_to_reference(const LevelSet& ls, const ReferencePartition& ref, double step,
                                       double margin = 0.0);

struct ChordOracle {
  double chord_length = 0.0;
  double best_length = 0.0;   // shortest competitor found
  double best_deviation = 0.0;  // its Hausdorff distance to the chord
  long competitors = 0;
  bool chord_minimal = false;
};

/// Brute force over polylines p1 -> z1 -> z2 -> p2 with z1, z2 on a lattice of
/// spacing `lattice` inside the disk. Confirms no competitor beats the chord.
ChordOracle brute_force_chord(const ReferencePartition& ref, double lattice);

}  // namespace phaselab

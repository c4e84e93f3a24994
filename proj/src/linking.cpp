#include "phaselab/linking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "phaselab/error.hpp"

namespace phaselab {

namespace {

double dist(const Point2& a, const Point2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

double point_segment(const Point2& x, const Point2& a, const Point2& b) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((x[0] - a[0]) * dx + (x[1] - a[1]) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(x[0] - a[0] - t * dx, x[1] - a[1] - t * dy);
}

void sample_segment(const Point2& a, const Point2& b, double step, std::vector<Point2>& out) {
  const int pieces = std::max(1, static_cast<int>(std::ceil(dist(a, b) / step)));
  for (int k = 0; k <= pieces; ++k) {
    const double t = static_cast<double>(k) / pieces;
    out.push_back({a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])});
  }
}

// Angle in [0, 2 pi).
double angle_of(double x, double y) {
  const double t = std::atan2(y, x);
  return t < 0.0 ? t + 2 * std::numbers::pi : t;
}

bool in_arc(double t, double t1, double t2) {
  const double two_pi = 2 * std::numbers::pi;
  const double span = std::fmod(std::fmod(t2 - t1, two_pi) + two_pi, two_pi);
  const double off = std::fmod(std::fmod(t - t1, two_pi) + two_pi, two_pi);
  return off > 0.0 && off < span;
}

}  // namespace

double LevelSet::length() const {
  double s = 0.0;
  for (const auto& seg : segments) s += dist(seg.a, seg.b);
  return s;
}

std::string LevelSet::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "segment,x0,y0,x1,y1\n";
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    os << i << ',' << s.a[0] << ',' << s.a[1] << ',' << s.b[0] << ',' << s.b[1] << '\n';
  }
  return os.str();
}

ReferencePartition ReferencePartition::chord(Point2 center, double radius, double t1, double t2) {
  if (!(radius > 0.0)) throw std::invalid_argument("chord: radius must be positive");
  ReferencePartition r;
  r.kind = ReferenceKind::ChordInDisk;
  r.center = center;
  r.radius = radius;
  r.p1 = {center[0] + radius * std::cos(t1), center[1] + radius * std::sin(t1)};
  r.p2 = {center[0] + radius * std::cos(t2), center[1] + radius * std::sin(t2)};
  return r;
}

ReferencePartition ReferencePartition::segment(Point2 p1, Point2 p2) {
  ReferencePartition r;
  r.kind = ReferenceKind::SegmentInRectangle;
  r.p1 = p1;
  r.p2 = p2;
  return r;
}

double ReferencePartition::distance(const Point2& x) const { return point_segment(x, p1, p2); }

Field two_arc_disk(double radius, double h, double t1, double t2, const std::vector<double>& inside,
                   const std::vector<double>& outside) {
  if (inside.size() != outside.size() || inside.empty())
    throw std::invalid_argument("two_arc_disk: boundary values must have equal, positive size");
  if (!(radius > 0.0) || !(h > 0.0)) throw std::invalid_argument("two_arc_disk: radius and h must be positive");
  const int half = static_cast<int>(std::ceil(radius / h)) + 2;
  const Grid g = Grid::centered(2, {2 * half + 1, 2 * half + 1, 1}, h);
  Field f = Field::ball(g, static_cast<int>(inside.size()), {0.0, 0.0, 0.0}, radius);
  f.assign([&](const auto& x, std::span<double> u) {
    const auto& v = in_arc(angle_of(x[0], x[1]), t1, t2) ? inside : outside;
    std::copy(v.begin(), v.end(), u.begin());
  });
  return f;
}

std::vector<ContinuationStep> eps_continuation(const Field& f0, const std::vector<double>& eps_schedule,
                                               const PotentialSpec& spec, const DescentSchedule& sched,
                                               const ContinuationOptions& opts) {
  if (eps_schedule.empty()) throw std::invalid_argument("eps_continuation: empty schedule");
  for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
    if (!(eps_schedule[i] > 0.0)) throw std::invalid_argument("eps_continuation: eps must be positive");
    if (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1]))
      throw std::invalid_argument("eps_continuation: schedule must be decreasing");
  }
  if (opts.starts < 1) throw std::invalid_argument("eps_continuation: at least one start");
  std::vector<ContinuationStep> out;
  Field start = f0;
  for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
    const double eps = eps_schedule[i];
    const auto init = [&](std::uint64_t k) {
      return k == 0 ? start : noisy_start(start, opts.amplitude, opts.seed + 1000 * i + k);
    };
    auto ms = multistart(init, spec, sched, opts.starts, eps);
    DescentResult& best = ms.runs[ms.best];
    ContinuationStep step;
    step.epsilon = eps;
    step.converged = best.converged;
    step.iterations = best.iterations;
    step.energy = best.energy;
    step.residual = best.residual;
    step.stop_reason = best.stop_reason;
    step.field = std::move(best.field);
    if (opts.warm_start) start = step.field;
    out.push_back(std::move(step));
  }
  return out;
}

LevelSet extract_levelset(const Field& f, std::span<const double> well, double gamma) {
  const Grid& g = f.grid();
  if (g.n != 2) throw std::invalid_argument("extract_levelset: 2-D field required");
  if (well.size() != static_cast<std::size_t>(f.m())) throw std::invalid_argument("extract_levelset: well size");
  std::vector<double> phi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s = 0.0;
    for (int k = 0; k < f.m(); ++k) s += std::pow(f.at(i)[k] - well[k], 2);
    phi[i] = std::sqrt(s) - gamma;
  }
  LevelSet ls;
  ls.gamma = gamma;
  const int nx = g.shape[0], ny = g.shape[1];
  for (int i = 0; i + 1 < nx; ++i) {
    for (int j = 0; j + 1 < ny; ++j) {
      // Corners counterclockwise from (i, j); edge e joins corner e and e + 1.
      const std::size_t c[4] = {g.index(i, j), g.index(i + 1, j), g.index(i + 1, j + 1), g.index(i, j + 1)};
      if (!f.active(c[0]) || !f.active(c[1]) || !f.active(c[2]) || !f.active(c[3])) continue;
      bool pos[4];
      for (int k = 0; k < 4; ++k) pos[k] = phi[c[k]] >= 0.0;
      Point2 cross[4];
      bool has[4];
      int count = 0;
      for (int e = 0; e < 4; ++e) {
        const int a = e, b = (e + 1) % 4;
        has[e] = pos[a] != pos[b];
        if (!has[e]) continue;
        ++count;
        const double t = phi[c[a]] / (phi[c[a]] - phi[c[b]]);
        const auto xa = g.coord(c[a]), xb = g.coord(c[b]);
        cross[e] = {xa[0] + t * (xb[0] - xa[0]), xa[1] + t * (xb[1] - xa[1])};
      }
      if (count == 2) {
        int first = -1, second = -1;
        for (int e = 0; e < 4; ++e)
          if (has[e]) (first < 0 ? first : second) = e;
        ls.segments.push_back({cross[first], cross[second]});
      } else if (count == 4) {
        const double mean = 0.25 * (phi[c[0]] + phi[c[1]] + phi[c[2]] + phi[c[3]]);
        if ((mean >= 0.0) == pos[0]) {
          // Corners 0 and 2 connect through the centre; cut off corners 1 and 3.
          ls.segments.push_back({cross[0], cross[1]});
          ls.segments.push_back({cross[2], cross[3]});
        } else {
          ls.segments.push_back({cross[3], cross[0]});
          ls.segments.push_back({cross[1], cross[2]});
        }
      }
    }
  }
  if (ls.segments.empty()) {
    std::ostringstream os;
    os << "no cell crosses |u - a| = " << gamma;
    throw EmptyLevelSet(os.str());
  }
  return ls;
}

HausdorffReport hausdorff_to_reference(const LevelSet& ls, const ReferencePartition& ref, double step,
                                       double margin) {
  if (!(step > 0.0)) throw std::invalid_argument("hausdorff: step must be positive");
  const bool disk = ref.kind == ReferenceKind::ChordInDisk;
  const auto keep = [&](const Point2& x) { return !disk || dist(x, ref.center) <= ref.radius - margin + 1e-12; };

  std::vector<Point2> a, b;
  for (const auto& s : ls.segments) sample_segment(s.a, s.b, step, a);
  sample_segment(ref.p1, ref.p2, step, b);
  std::erase_if(a, [&](const Point2& x) { return !keep(x); });
  std::erase_if(b, [&](const Point2& x) { return !keep(x); });

  HausdorffReport r;
  r.samples = static_cast<int>(a.size() + b.size());
  for (const auto& x : a) r.to_reference = std::max(r.to_reference, ref.distance(x));
  for (const auto& x : b) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& s : ls.segments) d = std::min(d, point_segment(x, s.a, s.b));
    r.from_reference = std::max(r.from_reference, d);
  }
  r.distance = std::max(r.to_reference, r.from_reference);
  return r;
}

ChordOracle brute_force_chord(const ReferencePartition& ref, double lattice) {
  if (ref.kind != ReferenceKind::ChordInDisk) throw std::invalid_argument("brute_force_chord: disk reference required");
  if (!(lattice > 0.0)) throw std::invalid_argument("brute_force_chord: lattice must be positive");
  std::vector<Point2> z;
  const int k = static_cast<int>(std::floor(ref.radius / lattice));
  for (int i = -k; i <= k; ++i)
    for (int j = -k; j <= k; ++j) {
      const Point2 p{ref.center[0] + i * lattice, ref.center[1] + j * lattice};
      if (dist(p, ref.center) <= ref.radius) z.push_back(p);
    }
  ChordOracle o;
  o.chord_length = dist(ref.p1, ref.p2);
  o.best_length = std::numeric_limits<double>::infinity();
  std::size_t b1 = 0, b2 = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double l1 = dist(ref.p1, z[i]);
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double len = l1 + dist(z[i], z[j]) + dist(z[j], ref.p2);
      ++o.competitors;
      if (len < o.best_length) {
        o.best_length = len;
        b1 = i;
        b2 = j;
      }
    }
  }
  o.best_deviation = std::max(ref.distance(z[b1]), ref.distance(z[b2]));
  o.chord_minimal = o.best_length >= o.chord_length - 1e-12;
  return o;
}

}  // namespace phaselab

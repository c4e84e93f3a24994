#include <doctest.h>

#include <cmath>
#include <numbers>

#include "phaselab/error.hpp"
#include "phaselab/linking.hpp"

using namespace phaselab;

namespace {

const double kPi = std::numbers::pi;

Field square(int nodes, double h, int m) { return Field(Grid::centered(2, {nodes, nodes, 1}, h), m); }

}  // namespace

TEST_CASE("affine data gives an exact straight level set") {
  Field f = square(41, 0.05, 1);
  f.assign([](const auto& x, std::span<double> u) { u[0] = 0.3 * x[0] + 0.2 * x[1]; });
  const std::vector<double> a{-2.0};
  const auto ls = extract_levelset(f, a, 2.0);
  // 0.3 x + 0.2 y = 0 through the square [-1, 1]^2.
  const auto ref = ReferencePartition::segment({-2.0 / 3.0, 1.0}, {2.0 / 3.0, -1.0});
  for (const auto& s : ls.segments) {
    CHECK(ref.distance(s.a) <= 1e-12);
    CHECK(ref.distance(s.b) <= 1e-12);
  }
  CHECK(std::abs(ls.length() - std::hypot(4.0 / 3.0, 2.0)) <= 1e-12);
}

TEST_CASE("radial modulus gives a circle") {
  const double R = 1.0, h = 0.04, gamma = 0.6;
  Field f = square(51, h, 2);
  f.assign([&](const auto& x, std::span<double> u) {
    u[0] = x[0] / R;
    u[1] = x[1] / R;
  });
  const std::vector<double> a{0.0, 0.0};
  const auto ls = extract_levelset(f, a, gamma);
  double worst = 0.0;
  for (const auto& s : ls.segments)
    for (const auto& p : {s.a, s.b}) worst = std::max(worst, std::abs(std::hypot(p[0], p[1]) - gamma * R));
  CHECK(worst <= h);
  // Inscribed polygon: perimeter just below 2 pi gamma R.
  CHECK(ls.length() <= 2 * kPi * gamma * R);
  CHECK(ls.length() >= 2 * kPi * gamma * R * (1 - 1e-3));
}

TEST_CASE("constant field has no level set") {
  Field f = square(11, 0.1, 1);
  const std::vector<double> a{1.0};
  f.fill(a);
  CHECK_THROWS_AS(extract_levelset(f, a, 0.5), EmptyLevelSet);
}

TEST_CASE("saddle cells follow the corner average") {
  // One active cell: the last row and column of a 3 x 3 grid are masked out.
  Field f = square(3, 1.0, 1);
  const Grid& g = f.grid();
  for (int k = 0; k < 3; ++k) {
    f.mask()[g.index(2, k)] = NodeTag::Exterior;
    f.mask()[g.index(k, 2)] = NodeTag::Exterior;
  }
  const std::vector<double> a{0.0};
  auto corner = [&](int i, int j) {
    const auto x = g.coord(g.index(i, j));
    return Point2{x[0], x[1]};
  };
  // Each segment must stay within half a cell of one of the two given corners.
  auto near_either = [&](const LevelSet& ls, Point2 p, Point2 q) {
    for (const auto& s : ls.segments) {
      const Point2 mid{0.5 * (s.a[0] + s.b[0]), 0.5 * (s.a[1] + s.b[1])};
      const double dp = std::hypot(mid[0] - p[0], mid[1] - p[1]), dq = std::hypot(mid[0] - q[0], mid[1] - q[1]);
      CHECK(std::min(dp, dq) < 0.5);
    }
  };
  // Corners (0,0) and (1,1) above gamma = 1, the other two below.
  auto set = [&](double p, double q) {
    f.at(g.index(0, 0))[0] = p;
    f.at(g.index(1, 1))[0] = p;
    f.at(g.index(1, 0))[0] = q;
    f.at(g.index(0, 1))[0] = q;
  };
  set(3.0, 0.5);  // average 1.75 >= 1: the high diagonal stays connected
  auto ls = extract_levelset(f, a, 1.0);
  REQUIRE(ls.segments.size() == 2);
  near_either(ls, corner(1, 0), corner(0, 1));
  set(1.2, 0.0);  // average 0.6 < 1: the low diagonal connects
  ls = extract_levelset(f, a, 1.0);
  REQUIRE(ls.segments.size() == 2);
  near_either(ls, corner(0, 0), corner(1, 1));
}

TEST_CASE("Hausdorff distance oracles") {
  const auto ref = ReferencePartition::chord({0.0, 0.0}, 1.0, kPi / 6, 5 * kPi / 6);
  LevelSet exact;
  exact.segments.push_back({ref.p1, ref.p2});
  CHECK(hausdorff_to_reference(exact, ref, 0.01).distance <= 1e-12);

  // Arc of the unit circle over the chord: distance is the sagitta 1 - cos(pi/3) = 1/2.
  LevelSet arc;
  const int pieces = 2000;
  for (int k = 0; k < pieces; ++k) {
    const double t0 = kPi / 6 + 2 * kPi / 3 * k / pieces, t1 = kPi / 6 + 2 * kPi / 3 * (k + 1) / pieces;
    arc.segments.push_back({{std::cos(t0), std::sin(t0)}, {std::cos(t1), std::sin(t1)}});
  }
  const auto hr = hausdorff_to_reference(arc, ref, 0.005);
  CHECK(std::abs(hr.distance - 0.5) <= 1e-5);
  CHECK(std::abs(hr.to_reference - 0.5) <= 1e-5);
  // Dropping points near the circle cannot increase the distance from the chord.
  CHECK(hausdorff_to_reference(arc, ref, 0.005, 0.2).from_reference <= hr.from_reference);
}

TEST_CASE("brute-force competitors never beat the chord") {
  const auto ref = ReferencePartition::chord({0.0, 0.0}, 1.0, -kPi / 3, kPi / 2);
  const auto o = brute_force_chord(ref, 0.1);
  CHECK(o.chord_minimal);
  CHECK(o.competitors > 10000);
  CHECK(o.best_length - o.chord_length <= 0.02);
  CHECK(o.best_deviation <= 0.1);
}

TEST_CASE("two-arc disk boundary data") {
  const std::vector<double> lo{-1.0}, hi{1.0};
  const Field f = two_arc_disk(1.0, 0.05, kPi / 6, 5 * kPi / 6, hi, lo);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f.active(i)) continue;
    const auto x = f.grid().coord(i);
    const double t = std::atan2(x[1], x[0]);
    if (t > kPi / 6 + 0.1 && t < 5 * kPi / 6 - 0.1) CHECK(f.at(i)[0] == 1.0);
    if (t < kPi / 6 - 0.1 || t > 5 * kPi / 6 + 0.1) CHECK(f.at(i)[0] == -1.0);
  }
}

TEST_CASE("continuation: constant data and the large-eps limit") {
  const auto spec = PotentialSpec::two_well();
  DescentSchedule sched;
  sched.tol = 1e-8;
  const std::vector<double> lo{-1.0}, hi{1.0};
  const Field flat = two_arc_disk(1.0, 0.1, 0.0, 0.0, hi, lo);
  for (const auto& step : eps_continuation(flat, {0.5, 0.2}, spec, sched)) {
    CHECK(step.converged);
    for (std::size_t i = 0; i < step.field.size(); ++i)
      if (step.field.active(i)) CHECK(step.field.at(i)[0] == -1.0);
  }

  // eps = 20: eps^2 Lap u = W'(u) forces |Lap u| <= max|W'| / eps^2 on [-1, 1].
  const Field data = two_arc_disk(1.0, 0.1, kPi / 6, 5 * kPi / 6, hi, lo);
  sched.tol = 1e-10;
  const auto steps = eps_continuation(data, {20.0}, spec, sched);
  REQUIRE(steps[0].converged);
  const Field lap = laplacian(steps[0].field);
  const double wmax = 2.0 / (3 * std::sqrt(3.0));
  double worst = 0.0;
  for (std::size_t i = 0; i < lap.size(); ++i)
    if (steps[0].field.tag(i) == NodeTag::Interior) worst = std::max(worst, std::abs(lap.at(i)[0]));
  CHECK(worst <= (wmax + 1e-9) / 400);
}

TEST_CASE("continuation localizes the interface near the chord") {
  const auto spec = PotentialSpec::two_well();
  DescentSchedule sched;
  sched.tol = 1e-6;
  const std::vector<double> lo{-1.0}, hi{1.0};
  const Field data = two_arc_disk(1.0, 0.025, kPi / 6, 5 * kPi / 6, hi, lo);
  const auto ref = ReferencePartition::chord({0.0, 0.0}, 1.0, kPi / 6, 5 * kPi / 6);
  const auto steps = eps_continuation(data, {0.2, 0.1}, spec, sched);
  std::vector<double> d;
  for (const auto& s : steps) {
    CHECK(s.converged);
    d.push_back(hausdorff_to_reference(extract_levelset(s.field, lo, 1.0), ref, 0.0125).distance);
  }
  CHECK(d[1] <= d[0]);
  CHECK(d[1] <= 2 * 0.1 + 2 * 0.025);
  // Outside an O(eps) slab the field sits at the wells.
  double slab = 0.0;
  for (std::size_t i = 0; i < steps[1].field.size(); ++i) {
    if (steps[1].field.tag(i) != NodeTag::Interior) continue;
    const auto x = steps[1].field.grid().coord(i);
    if (std::abs(steps[1].field.at(i)[0]) < 0.9) slab = std::max(slab, ref.distance({x[0], x[1]}));
  }
  CHECK(slab <= 6 * 0.1);
}

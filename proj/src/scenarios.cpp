#include "phaselab/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "phaselab/error.hpp"

namespace phaselab {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

double to_num(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(what + ": bad number '" + s + "'");
  }
}

int well_index(const std::string& s, const PotentialSpec& spec, const std::string& what) {
  const double x = to_num(s, what);
  if (x != std::floor(x) || x < 0 || x >= static_cast<double>(spec.wells.size()))
    throw ConfigError(what + ": no well '" + s + "'");
  return static_cast<int>(x);
}

double angle_of(double x, double y) {
  const double t = std::atan2(y, x);
  return t < 0.0 ? t + 2 * std::numbers::pi : t;
}

}  // namespace

PotentialSpec potential_from_config(Config& c) {
  const std::string kind = c.str("potential", "two_well");
  try {
    if (kind == "two_well") return PotentialSpec::two_well();
    if (kind == "ring") return PotentialSpec::ring(c.num("anisotropy", 0.05), c.num("scale", 1.0));
    if (kind == "product") return PotentialSpec::product(c.points("wells"), c.num("scale", 1.0));
    if (kind == "power") return PotentialSpec::power(c.points("wells"), c.num("alpha", 2.0), c.num("scale", 1.0));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("potential: ") + e.what());
  }
  throw ConfigError("key 'potential': unknown kind '" + kind + "'");
}

void apply_descriptor(Field& f, const std::string& descriptor, const PotentialSpec& spec, bool boundary_only) {
  const auto colon = descriptor.find(':');
  const std::string kind = descriptor.substr(0, colon);
  const auto args = colon == std::string::npos ? std::vector<std::string>{} : split(descriptor.substr(colon + 1), ',');
  const int m = f.m();
  std::function<void(const std::array<double, 3>&, std::span<double>)> fn;
  auto copy = [m](const std::vector<double>& v, std::span<double> u) {
    for (int k = 0; k < m; ++k) u[k] = v[k];
  };
  if (kind == "well" && args.size() == 1) {
    const auto a = spec.wells[well_index(args[0], spec, descriptor)];
    fn = [=](const auto&, std::span<double> u) { copy(a, u); };
  } else if (kind == "value" && static_cast<int>(args.size()) == m) {
    std::vector<double> v;
    for (const auto& s : args) v.push_back(to_num(s, descriptor));
    fn = [=](const auto&, std::span<double> u) { copy(v, u); };
  } else if (kind == "halfspace" && args.size() == 2) {
    const auto a = spec.wells[well_index(args[0], spec, descriptor)];
    const auto b = spec.wells[well_index(args[1], spec, descriptor)];
    fn = [=](const auto& x, std::span<double> u) {
      for (int k = 0; k < m; ++k) u[k] = x[0] < 0 ? a[k] : x[0] > 0 ? b[k] : 0.5 * (a[k] + b[k]);
    };
  } else if (kind == "two_arc" && args.size() == 4) {
    if (f.grid().n != 2) throw ConfigError(descriptor + ": two_arc needs dim = 2");
    const double t1 = to_num(args[0], descriptor), t2 = to_num(args[1], descriptor);
    const auto in = spec.wells[well_index(args[2], spec, descriptor)];
    const auto out = spec.wells[well_index(args[3], spec, descriptor)];
    fn = [=](const auto& x, std::span<double> u) {
      const double two_pi = 2 * std::numbers::pi;
      const double span = std::fmod(std::fmod(t2 - t1, two_pi) + two_pi, two_pi);
      const double off = std::fmod(std::fmod(angle_of(x[0], x[1]) - t1, two_pi) + two_pi, two_pi);
      copy(off > 0.0 && off < span ? in : out, u);
    };
  } else {
    throw ConfigError("bad field descriptor '" + descriptor + "'");
  }
  if (boundary_only)
    f.assign_boundary(fn);
  else
    f.assign(fn);
}

Field field_from_config(Config& c, const PotentialSpec& spec) {
  const int n = static_cast<int>(c.integer("dim", 2));
  if (n < 1 || n > 3) throw ConfigError("key 'dim': must be 1, 2 or 3");
  const auto sv = c.list("shape");
  if (static_cast<int>(sv.size()) != n) throw ConfigError("key 'shape': expected " + std::to_string(n) + " entries");
  std::array<int, 3> shape{1, 1, 1};
  for (int a = 0; a < n; ++a) {
    if (sv[a] != std::floor(sv[a]) || sv[a] < 3) throw ConfigError("key 'shape': entries must be integers >= 3");
    shape[a] = static_cast<int>(sv[a]);
  }
  const double h = c.num("h");
  if (!(h > 0.0)) throw ConfigError("key 'h': must be positive");
  const Grid g = Grid::centered(n, shape, h);
  const std::string domain = c.str("domain", "box");
  Field f;
  if (domain == "box") {
    f = Field(g, spec.m);
  } else if (domain == "disk") {
    double half = 1e300;
    for (int a = 0; a < n; ++a) half = std::min(half, 0.5 * h * (shape[a] - 1));
    const double r = c.num("radius", half - 2 * h);
    if (!(r > 0.0) || r > half - h) throw ConfigError("key 'radius': must fit inside the grid");
    f = Field::ball(g, spec.m, {0.0, 0.0, 0.0}, r);
  } else {
    throw ConfigError("key 'domain': unknown '" + domain + "'");
  }
  const std::string bc = c.str("bc");
  apply_descriptor(f, c.str("init", bc), spec, false);
  apply_descriptor(f, bc, spec, true);
  const double noise = c.num("noise", 0.0);
  if (noise < 0.0) throw ConfigError("key 'noise': must be >= 0");
  if (noise > 0.0) f = noisy_start(f, noise, static_cast<std::uint64_t>(c.integer("seed", 0)));
  return f;
}

DescentSchedule schedule_from_config(Config& c) {
  DescentSchedule s;
  s.tol = c.num("descent_tol", 1e-8);
  s.max_iters = c.integer("max_iters", 1'000'000);
  s.dt0 = c.num("dt", 0.0);
  s.log_every = c.integer("log_every", 100);
  const std::string rule = c.str("dt_rule", "adaptive");
  if (rule == "adaptive")
    s.dt_rule = DtRule::Adaptive;
  else if (rule == "fixed")
    s.dt_rule = DtRule::Fixed;
  else
    throw ConfigError("key 'dt_rule': expected adaptive or fixed");
  if (!(s.tol > 0.0) || s.max_iters < 1 || s.dt0 < 0.0 || s.log_every < 1)
    throw ConfigError("descent schedule: tol, max_iters and log_every must be positive, dt >= 0");
  s.seed = static_cast<std::uint64_t>(c.integer("seed", 0));
  return s;
}

ConnectionOptions connection_options_from_config(Config& c) {
  ConnectionOptions o;
  o.L = c.num("L", o.L);
  o.N = static_cast<int>(c.integer("N", o.N));
  o.dt = c.num("connect_dt", o.dt);
  o.tol = c.num("connect_tol", o.tol);
  o.max_iters = c.integer("connect_iters", o.max_iters);
  if (c.has("bias")) o.bias = c.list("bias");
  return o;
}

ConnectionProfile mirror_connection(const ConnectionProfile& e) {
  ConnectionProfile out = e;
  const int m = e.curve.m;
  for (std::size_t i = 0; i < out.curve.values.size(); ++i)
    if (i % m != 0) out.curve.values[i] = -out.curve.values[i];
  for (int k = 1; k < m; ++k) {
    out.a_minus[k] = -out.a_minus[k];
    out.a_plus[k] = -out.a_plus[k];
  }
  return out;
}

Field cylinder_transition(const ConnectionProfile& lower, const ConnectionProfile& upper, double Y, double width) {
  const Curve& c = lower.curve;
  if (upper.curve.N != c.N || upper.curve.L != c.L || upper.curve.m != c.m)
    throw TruncationMismatch("cylinder_transition: connections on different grids");
  if (!(Y > 0.0) || !(width > 0.0)) throw std::invalid_argument("cylinder_transition: Y and width must be positive");
  const double h = c.h();
  const int ny = 2 * static_cast<int>(std::lround(Y / h)) + 1;
  const double y0 = -h * (ny - 1) / 2;
  const Grid g = Grid::make(2, {c.N, ny, 1}, h, {-c.L, y0, 0.0});
  Field f(g, c.m);
  for (int i = 0; i < c.N; ++i)
    for (int j = 0; j < ny; ++j) {
      const double y = y0 + j * h;
      const double t = j == 0 ? 0.0 : j == ny - 1 ? 1.0 : 0.5 * (1 + std::tanh(y / width));
      auto u = f.at(g.index(i, j));
      for (int k = 0; k < c.m; ++k) u[k] = (1 - t) * lower.curve.at(i)[k] + t * upper.curve.at(i)[k];
    }
  return f;
}

Field strip(double W, double Y, double h, double wall, double inside) {
  const int nx = 2 * static_cast<int>(std::lround(W / h)) + 1;
  const int ny = 2 * static_cast<int>(std::lround(Y / h)) + 1;
  Field f(Grid::centered(2, {nx, ny, 1}, h), 1);
  const std::vector<double> in{inside};
  f.fill(in);
  f.assign_boundary([&](const auto&, std::span<double> u) { u[0] = wall; });
  return f;
}

}  // namespace phaselab

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "phaselab/config.hpp"
#include "phaselab/error.hpp"
#include "phaselab/scenarios.hpp"

using namespace phaselab;

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("parsing and typed access") {
  auto c = Config::parse("# header\nh = 0.25\n  dim=2 # trailing\nradii = 1, 2:4:1, 10\nwells = -1,0; 1,0\nflag = yes\n");
  CHECK(c.num("h") == 0.25);
  CHECK(c.integer("dim", 1) == 2);
  CHECK(c.list("radii") == std::vector<double>{1, 2, 3, 4, 10});
  const auto w = c.points("wells");
  REQUIRE(w.size() == 2);
  CHECK(w[1] == std::vector<double>{1, 0});
  CHECK(c.flag("flag", false));
  CHECK(c.num("eps", 0.1) == 0.1);
  CHECK(c.has("eps"));
  CHECK(c.resolved() == "dim = 2\neps = 0.1\nflag = yes\nh = 0.25\nradii = 1, 2:4:1, 10\nwells = -1,0; 1,0\n");
}

TEST_CASE("malformed input names the key or line") {
  CHECK_THROWS_WITH_AS(Config::parse("a = 1\nnot an assignment\n"), doctest::Contains("config:2"), ConfigError);
  CHECK_THROWS_WITH_AS(Config::parse("a = 1\na = 2\n"), doctest::Contains("duplicate key 'a'"), ConfigError);
  auto c = Config::parse("h = abc\nbogus = 1\n");
  CHECK_THROWS_WITH_AS(c.num("h"), doctest::Contains("'h'"), ConfigError);
  CHECK_THROWS_WITH_AS(c.reject_unknown({"h"}), doctest::Contains("'bogus'"), ConfigError);
  CHECK_THROWS_AS(c.num("missing"), ConfigError);
  CHECK_THROWS_AS(Config::load("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("hash follows the resolved text") {
  auto a = Config::parse("x = 1\ny = 2\n");
  auto b = Config::parse("y = 2\n# reordered\nx = 1\n");
  CHECK(a.hash() == b.hash());
  b.set("y", "3");
  CHECK(a.hash() != b.hash());
}

TEST_CASE("format_number round-trips") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 123456789.0, -2.5}) CHECK(std::stod(format_number(x)) == x);
  CHECK(format_number(0.1) == "0.1");
}

TEST_CASE("fields from descriptors") {
  auto c = Config::parse("dim = 2\nshape = 11,11\nh = 0.1\nbc = halfspace:0,1\n");
  const auto spec = potential_from_config(c);
  const Field f = field_from_config(c, spec);
  CHECK(f.at(f.grid().index(0, 5))[0] == -1.0);
  CHECK(f.at(f.grid().index(10, 5))[0] == 1.0);
  CHECK(f.at(f.grid().index(5, 5))[0] == 0.0);

  auto d = Config::parse("dim = 2\nshape = 21,21\nh = 0.1\ndomain = disk\nbc = well:1\ninit = value:0.5\n");
  const Field g = field_from_config(d, spec);
  CHECK(g.at(g.grid().index(10, 10))[0] == 0.5);
  CHECK_FALSE(g.active(g.grid().index(0, 0)));

  auto bad = Config::parse("dim = 2\nshape = 11,11\nh = 0.1\nbc = well:7\n");
  CHECK_THROWS_AS(field_from_config(bad, spec), ConfigError);
  auto arc = Config::parse("dim = 1\nshape = 11\nh = 0.1\nbc = two_arc:0,1,0,1\n");
  CHECK_THROWS_AS(field_from_config(arc, spec), ConfigError);
}

TEST_CASE("mirror and transition fields") {
  ConnectionProfile e;
  e.curve.L = 1.0;
  e.curve.N = 5;
  e.curve.m = 2;
  e.curve.values = {-1, 0, -0.5, 0.5, 0, 1, 0.5, 0.5, 1, 0};
  e.a_minus = {-1, 0};
  e.a_plus = {1, 0};
  const auto m = mirror_connection(e);
  CHECK(m.curve.at(2)[1] == -1.0);
  CHECK(m.curve.at(2)[0] == 0.0);
  const Field f = cylinder_transition(m, e, 2.0, 1.0);
  const Grid& g = f.grid();
  CHECK(g.shape[1] == 9);
  CHECK(f.at(g.index(2, 0))[1] == -1.0);
  CHECK(f.at(g.index(2, 8))[1] == 1.0);
  CHECK(std::abs(f.at(g.index(2, 4))[1]) <= 1e-15);
}

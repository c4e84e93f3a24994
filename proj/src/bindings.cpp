#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <set>

#include "cli.hpp"
#include "phaselab/config.hpp"
#include "phaselab/connection1d.hpp"
#include "phaselab/density.hpp"
#include "phaselab/error.hpp"
#include "phaselab/minimizer.hpp"
#include "phaselab/parallel.hpp"
#include "phaselab/potentials.hpp"
#include "phaselab/scenarios.hpp"

namespace py = pybind11;
using namespace phaselab;

namespace {

py::array_t<double> as_array(const std::vector<double>& v, std::vector<py::ssize_t> shape) {
  py::array_t<double> out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<double> field_values(const Field& f) {
  const Grid& g = f.grid();
  std::vector<py::ssize_t> shape;
  for (int a = 0; a < g.n; ++a) shape.push_back(g.shape[a]);
  shape.push_back(f.m());
  return as_array(f.values(), shape);
}

py::array_t<double> curve_values(const Curve& c) { return as_array(c.values, {c.N, c.m}); }

py::array_t<double> curve_s(const Curve& c) {
  py::array_t<double> out(c.N);
  for (int i = 0; i < c.N; ++i) out.mutable_data()[i] = c.s(i);
  return out;
}

}  // namespace

PYBIND11_MODULE(_phaselab, m) {
  m.doc() = "Finite-difference lab for the vector Allen-Cahn system.";

  // Messages start with the error kind, e.g. "NotHyperbolic: ...".
  static py::exception<Error> error(m, "PhaselabError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def("set_thread_count", &set_thread_count, py::arg("threads"));
  m.def("thread_count", &thread_count);

  py::class_<PotentialSpec>(m, "PotentialSpec")
      .def_static("two_well", &PotentialSpec::two_well)
      .def_static("product", &PotentialSpec::product, py::arg("wells"), py::arg("scale") = 1.0)
      .def_static("power", &PotentialSpec::power, py::arg("wells"), py::arg("alpha"), py::arg("scale") = 1.0)
      .def_static("ring", &PotentialSpec::ring, py::arg("anisotropy"), py::arg("scale") = 1.0)
      .def_readonly("m", &PotentialSpec::m)
      .def_readonly("wells", &PotentialSpec::wells)
      .def_readonly("alpha", &PotentialSpec::alpha)
      .def_readonly("symmetric", &PotentialSpec::symmetric)
      .def("__call__", [](const PotentialSpec& s, const std::vector<double>& u) { return eval_w(s, u); })
      .def("gradient", [](const PotentialSpec& s, const std::vector<double>& u) { return eval_w_grad(s, u); })
      .def("hessian", [](const PotentialSpec& s, const std::vector<double>& u) {
        return as_array(eval_w_hess(s, u), {s.m, s.m});
      });

  m.def(
      "geodesic_distance",
      [](const PotentialSpec& s, const std::vector<double>& a, const std::vector<double>& b, double resolution) {
        return geodesic_distance(s, a, b, resolution);
      },
      py::arg("spec"), py::arg("a"), py::arg("b"), py::arg("resolution"));

  py::class_<ConnectionProfile>(m, "Connection")
      .def_property_readonly("s", [](const ConnectionProfile& e) { return curve_s(e.curve); })
      .def_property_readonly("values", [](const ConnectionProfile& e) { return curve_values(e.curve); })
      .def_readonly("a_minus", &ConnectionProfile::a_minus)
      .def_readonly("a_plus", &ConnectionProfile::a_plus)
      .def_readonly("action", &ConnectionProfile::action)
      .def_readonly("residual", &ConnectionProfile::residual)
      .def_readonly("k", &ConnectionProfile::k)
      .def_readonly("iterations", &ConnectionProfile::iterations);

  m.def(
      "solve_connection",
      [](const PotentialSpec& spec, double L, int N, double tol, std::vector<double> bias) {
        ConnectionOptions o;
        o.L = L;
        o.N = N;
        o.tol = tol;
        o.bias = std::move(bias);
        py::gil_scoped_release release;
        return solve_connection(spec, o);
      },
      py::arg("spec"), py::arg("L") = 10.0, py::arg("N") = 2001, py::arg("tol") = 1e-9,
      py::arg("bias") = std::vector<double>{});

  m.def(
      "hyperbolicity",
      [](const ConnectionProfile& e, const PotentialSpec& spec) {
        const auto r = hyperbolicity(e, spec, false);
        py::dict d;
        d["eta"] = r.eta;
        d["hyperbolic"] = r.hyperbolic;
        d["iterations"] = r.iterations;
        d["eigenvector"] = curve_values(r.eigenvector);
        return d;
      },
      py::arg("connection"), py::arg("spec"));

  m.def(
      "lambda_star",
      [](const ConnectionProfile& e, const PotentialSpec& spec, int directions, std::uint64_t seed) {
        WqqOptions o;
        o.directions = directions;
        o.seed = seed;
        const auto r = wqq_check(e, spec, o);
        py::dict d;
        d["eta"] = r.eta;
        d["q_bar"] = r.q_bar;
        d["lambda_star"] = r.lambda_star;
        d["q"] = r.q_scan;
        d["inf_dqq"] = r.inf_dqq;
        return d;
      },
      py::arg("connection"), py::arg("spec"), py::arg("directions") = 16, py::arg("seed") = 0);

  // Config-driven minimization: the same keys as the `solve` command.
  m.def(
      "solve",
      [](const std::string& text) {
        Config c = Config::parse(text, "python");
        c.reject_unknown({"potential", "wells", "alpha", "scale", "anisotropy", "descent_tol", "max_iters", "dt",
                          "dt_rule", "log_every", "seed", "dim", "shape", "h", "domain", "radius", "bc", "init",
                          "noise", "eps"});
        const double eps = c.num("eps", 1.0);
        const auto spec = potential_from_config(c);
        const Field f0 = field_from_config(c, spec);
        const auto sched = schedule_from_config(c);
        DescentResult r;
        {
          py::gil_scoped_release release;
          r = descend(f0, spec, sched, eps);
        }
        py::dict d;
        d["u"] = field_values(r.field);
        d["h"] = r.field.grid().h;
        d["converged"] = r.converged;
        d["iterations"] = r.iterations;
        d["energy"] = r.energy;
        d["residual"] = r.residual;
        d["stop_reason"] = r.stop_reason;
        return d;
      },
      py::arg("config"));

  m.def(
      "fit_exponent",
      [](const std::vector<double>& values, const std::vector<double>& radii, double lo, double hi) {
        return fit_exponent(values, radii, {lo, hi}).exponent;
      },
      py::arg("values"), py::arg("radii"), py::arg("lo"), py::arg("hi"));

  m.def("run_cli", &cli::run, py::arg("args"), "Runs the command-line tool in-process; returns the exit code.");
}

// Acceptance run: one PASS/FAIL line per criterion, JSON reports under --out,
// and a second deterministic pass compared byte for byte.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

#include "phaselab/config.hpp"
#include "phaselab/connection1d.hpp"
#include "phaselab/density.hpp"
#include "phaselab/error.hpp"
#include "phaselab/linking.hpp"
#include "phaselab/minimizer.hpp"
#include "phaselab/parallel.hpp"
#include "phaselab/polar.hpp"
#include "phaselab/potentials.hpp"
#include "phaselab/scenarios.hpp"

using namespace phaselab;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const double kSqrt2 = std::numbers::sqrt2;
const double kPi = std::numbers::pi;
const double kAction = 2 * kSqrt2 / 3;

struct Outcome {
  json report;
  bool pass = false;
  std::string summary;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::string params;  // key = value lines recorded as the manifest
  std::function<Outcome(Config&)> run;
};

json measured(double value, double tolerance) { return json{{"value", value}, {"tolerance", tolerance}}; }

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

// ------------------------------------------------------------------ 1

Outcome connection_fidelity(Config& c) {
  ConnectionOptions o;
  o.L = c.num("L");
  o.N = static_cast<int>(c.integer("N", 2001));
  const auto e = solve_connection(PotentialSpec::two_well(), o);
  double err = 0.0;
  for (int i = 0; i < e.curve.N; ++i)
    err = std::max(err, std::abs(e.curve.at(i)[0] - std::tanh(e.curve.s(i) / kSqrt2)));
  const double rel = std::abs(e.action - kAction) / kAction;
  Outcome out;
  out.pass = err <= 1e-4 && rel <= 1e-4;
  out.report = {{"max_profile_error", measured(err, 1e-4)},
                {"action", e.action},
                {"action_oracle", kAction},
                {"action_rel_error", measured(rel, 1e-4)},
                {"residual", e.residual},
                {"iterations", e.iterations}};
  out.summary = "max|e - tanh| = " + fmt(err) + ", action rel err = " + fmt(rel);
  return out;
}

// ------------------------------------------------------------------ 2

const std::vector<double> kPolarWell{1.0, 0.0};

Field analytic_polar(double h) {
  const int nodes = static_cast<int>(std::lround(2 / h)) + 1;
  Field f(Grid::centered(2, {nodes, nodes, 1}, h), 2);
  f.assign([](const auto& x, std::span<double> u) {
    const double r = 1.5 + 0.5 * std::sin(x[0]) * std::cos(x[1]);
    const double th = x[0] + 0.5 * x[1] * x[1];
    u[0] = kPolarWell[0] + r * std::cos(th);
    u[1] = kPolarWell[1] + r * std::sin(th);
  });
  return f;
}

Outcome polar_identity(Config& c) {
  const auto hs = c.list("h");
  const auto spec = PotentialSpec::product({kPolarWell, {-1.0, 0.0}});
  std::vector<double> split, ident;
  for (double h : hs) {
    const Field f = analytic_polar(h);
    const auto region = RegionMask::all(f);
    const auto s = energy_split(f, kPolarWell, region, spec);
    split.push_back(std::abs(kinetic_energy(f, region) - 0.5 * (s.grad_q + s.q2_grad_nu)));
    const auto prof = ComparisonProfile::power({0, 0, 0}, 0.9, 0.6, 1.0, 2.5);
    const auto cmp = build_comparison(f, kPolarWell, prof, 0.5);
    ident.push_back(std::abs(verify_identity(f, cmp.sigma, kPolarWell, region, spec).mismatch));
  }
  Outcome out;
  out.pass = true;
  json orders = json::array();
  double worst = 1e300;
  for (std::size_t k = 0; k + 1 < hs.size(); ++k) {
    const double os = std::log2(split[k] / split[k + 1]) / std::log2(hs[k] / hs[k + 1]);
    const double oi = std::log2(ident[k] / ident[k + 1]) / std::log2(hs[k] / hs[k + 1]);
    orders.push_back({{"h", {hs[k], hs[k + 1]}}, {"split_order", measured(os, 1.8)}, {"identity_order", measured(oi, 1.8)}});
    out.pass = out.pass && os >= 1.8 && oi >= 1.8;
    worst = std::min({worst, os, oi});
  }
  out.report = {{"h", hs}, {"split_mismatch", split}, {"identity_mismatch", ident}, {"orders", orders}};
  out.summary = "lowest observed order " + fmt(worst) + " (>= 1.8)";
  return out;
}

// ------------------------------------------------------------------ 3

Outcome planar_scaling(Config& c) {
  const auto spec = PotentialSpec::two_well();
  const int nodes = static_cast<int>(c.integer("nodes", 256));
  const double h = c.num("h");
  const Grid g = Grid::make(2, {nodes, nodes, 1}, h, {-h * (nodes - 1) / 2, -h * (nodes - 1) / 2, 0.0});
  Field f0(g, 1);
  // Two-arc data on the square: the left and right halves of the boundary.
  apply_descriptor(f0, "halfspace:0,1", spec, false);
  DescentSchedule sched;
  sched.tol = c.num("descent_tol");
  const auto res = descend(f0, spec, sched);
  const auto radii = c.list("radii");
  const double lambda = c.num("lambda");
  ScanOptions so;
  so.shell_width = c.num("T");
  const std::vector<double> plus{1.0};
  const auto rep = scan(res.field, plus, {0, 0, 0}, radii, lambda, spec, so);
  const std::array<double, 2> window{radii.front(), radii.back()};
  const auto fv = fit_exponent(rep.V, radii, window);
  const auto fj = fit_exponent(rep.J, radii, window);
  const double c2 = helmholtz_profile(radii.back(), 2.0, 2).c2;
  const auto sch = difference_scheme_check(rep, c2);
  Outcome out;
  out.pass = res.converged && fv.exponent >= 1.9 && fv.exponent <= 2.1 && fj.exponent >= 0.9 && fj.exponent <= 1.1 &&
             sch.c_lambda > 0.0 && !sch.vacuous;
  json rows = json::array();
  for (std::size_t i = 0; i < radii.size(); ++i)
    rows.push_back({{"R", radii[i]}, {"V", measured(rep.V[i], rep.cell_layer_bound[i])}, {"A", rep.A[i]}, {"J", rep.J[i]}});
  out.report = {{"converged", res.converged},
                {"iterations", res.iterations},
                {"residual", measured(res.residual, sched.tol)},
                {"radii", rows},
                {"V_exponent", measured(fv.exponent, 0.1)},
                {"J_exponent", measured(fj.exponent, 0.1)},
                {"c2", c2},
                {"c_lambda", sch.c_lambda},
                {"scheme_pass", sch.pass},
                {"c0", sch.c0}};
  out.summary = "V exponent " + fmt(fv.exponent) + ", J exponent " + fmt(fj.exponent) + ", C(lambda) " + fmt(sch.c_lambda);
  return out;
}

// ------------------------------------------------------------------ 4

Outcome liouville(Config& c) {
  const auto spec = PotentialSpec::two_well();
  const double h = c.num("h"), R = c.num("radius");
  const int nodes = 2 * static_cast<int>(std::ceil(R / h)) + 5;
  Field f = Field::ball(Grid::centered(2, {nodes, nodes, 1}, h), 1, {0, 0, 0}, R);
  const std::vector<double> a{1.0};
  f.fill(a);
  DescentSchedule sched;
  sched.tol = c.num("descent_tol");
  const auto starts = c.integer("starts", 8);
  const double amp = c.num("amplitude");
  Outcome out;
  out.pass = true;
  json runs = json::array();
  double worst = 0.0;
  for (long s = 0; s < starts; ++s) {
    const auto res = descend(noisy_start(f, amp, static_cast<std::uint64_t>(s)), spec, sched);
    const double sup = sup_deviation(res.field, a, RegionMask::all(res.field));
    runs.push_back({{"seed", s}, {"converged", res.converged}, {"iterations", res.iterations}, {"sup", measured(sup, 1e-6)}});
    out.pass = out.pass && res.converged && sup <= 1e-6;
    worst = std::max(worst, sup);
  }
  out.report = {{"runs", runs}};
  out.summary = "worst sup|u - a| = " + fmt(worst) + " over " + std::to_string(starts) + " starts";
  return out;
}

// ------------------------------------------------------------------ 5

Outcome decay(Config& c) {
  const auto spec = PotentialSpec::two_well();
  // Both long walls hold a; the cap at y = -Y holds `cap`, and |u - a| is
  // fitted against the distance from that cap.
  const double Y = c.num("half_length"), cap = c.num("cap");
  Field f0 = strip(c.num("half_width"), Y, c.num("h"), 1.0, 1.0);
  f0.assign_boundary([&](const auto& x, std::span<double> u) {
    if (x[1] <= -Y + 1e-9) u[0] = cap;
  });
  DescentSchedule sched;
  sched.tol = c.num("descent_tol");
  const auto res = descend(f0, spec, sched);
  const std::vector<double> a{1.0};
  const Grid& g = res.field.grid();
  std::vector<double> dist(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) dist[i] = g.coord(i)[1] + Y;
  const auto fit = exp_decay_probe(res.field, a, dist);
  const double hess = eval_w_hess(spec, a)[0];
  const double target = std::sqrt(hess);
  const double rel = std::abs(fit.k - target) / target;
  Outcome out;
  out.pass = res.converged && rel <= 0.1;
  out.report = {{"converged", res.converged},
                {"iterations", res.iterations},
                {"k", fit.k},
                {"K", fit.K},
                {"k_target", target},
                {"k_rel_error", measured(rel, 0.1)},
                {"window", {fit.window[0], fit.window[1]}},
                {"points", fit.points},
                {"fit_residual", fit.residual}};
  out.summary = "k = " + fmt(fit.k) + " vs sqrt(W''(a)) = " + fmt(target) + " along the strip";
  return out;
}

// ------------------------------------------------------------------ 6

double dense_odd_eigenvalue(const ConnectionProfile& e, const PotentialSpec& spec) {
  // Full-line -D2 + W''(e) with zero ends; tridiagonal, so bisection on the
  // Sturm sequence gives every eigenvalue. Odd eigenvectors alternate with
  // even ones; pick the smallest odd by counting sign changes of the eigenvector.
  const Curve& cv = e.curve;
  const int n = cv.N - 2;
  const double h = cv.h();
  std::vector<double> d(n), off(n, -1 / (h * h));
  for (int i = 0; i < n; ++i) d[i] = 2 / (h * h) + eval_w_hess(spec, cv.at(i + 1))[0];
  auto count_below = [&](double x) {
    int cnt = 0;
    double q = d[0] - x;
    if (q < 0) ++cnt;
    for (int i = 1; i < n; ++i) {
      q = d[i] - x - off[i] * off[i] / (q == 0.0 ? 1e-300 : q);
      if (q < 0) ++cnt;
    }
    return cnt;
  };
  auto kth = [&](int k) {
    double lo = -10.0, hi = 10.0 + 4 / (h * h);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (count_below(mid) > k ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  };
  // Symmetric potential: eigenvectors alternate even, odd, even, ...; the
  // ground state is even (the translation mode), so the first odd one is k = 1.
  return kth(1);
}

Outcome hyperbolicity_lambda(Config& c) {
  const auto spec = PotentialSpec::two_well();
  ConnectionOptions o;
  o.L = c.num("L");
  o.N = static_cast<int>(c.integer("N", 2001));
  const auto e = solve_connection(spec, o);
  const auto hyp = hyperbolicity(e, spec, false);
  const double dense = dense_odd_eigenvalue(e, spec);
  const double agree = std::abs(hyp.eta - dense) / std::abs(dense);
  WqqOptions wo;
  wo.directions = static_cast<int>(c.integer("directions", 16));
  wo.seed = static_cast<std::uint64_t>(c.integer("seed", 0));
  const double qmax = c.num("q_max"), qstep = c.num("q_step");
  for (long i = 0; i * qstep <= qmax + 1e-12; ++i) wo.q_scan.push_back(i * qstep);
  const auto w = wqq_check(e, spec, wo);
  double worst = 0.0;
  for (std::size_t k = 0; k < w.dqq0.size(); ++k) worst = std::max(worst, std::abs(w.dqq0[k] - w.form0[k]) / w.form0[k]);
  Outcome out;
  out.pass = hyp.eta >= 0.1 && agree <= 0.01 && w.q_bar > 0.0 && worst <= 1e-3 && w.dqq0.size() == 16;
  out.report = {{"eta", measured(hyp.eta, 0.1)},
                {"eta_dense", dense},
                {"eta_rel_disagreement", measured(agree, 0.01)},
                {"inverse_iterations", hyp.iterations},
                {"q_bar", w.q_bar},
                {"lambda_star", w.lambda_star},
                {"directions", w.dqq0.size()},
                {"dqq0_vs_form_rel", measured(worst, 1e-3)},
                {"richardson_gap", w.richardson_gap},
                {"inf_dqq", w.inf_dqq}};
  out.summary = "eta = " + fmt(hyp.eta) + " (dense " + fmt(dense) + "), q_bar = " + fmt(w.q_bar) +
                ", max |Dqq - <Tv,v>| rel = " + fmt(worst);
  return out;
}

// ------------------------------------------------------------------ 7

Outcome cylinder_scaling(Config& c) {
  const auto spec = PotentialSpec::ring(c.num("anisotropy"));
  ConnectionOptions o;
  o.L = c.num("L");
  o.N = static_cast<int>(c.integer("N", 81));
  o.bias = {0.0, 0.8};
  o.tol = c.num("connect_tol");
  const auto upper = solve_connection(spec, o);
  const auto hyp = hyperbolicity(upper, spec);
  WqqOptions wo;
  wo.directions = static_cast<int>(c.integer("directions", 16));
  for (int i = 0; i <= 40; ++i) wo.q_scan.push_back(0.025 * i);
  const auto w = wqq_check(upper, spec, wo);
  const double lambda = c.num("lambda_fraction") * w.lambda_star;
  const auto lower = mirror_connection(upper);
  const Field f0 = cylinder_transition(lower, upper, c.num("Y"), c.num("width"));
  DescentSchedule sched;
  sched.tol = c.num("descent_tol");
  const auto res = descend_symmetric(f0, spec, sched);

  // Centre the balls on the level {q = lambda} along y.
  const auto p = cyl_polar(res.field, upper, spec);
  const double y0 = level_crossing(p, lambda);
  const auto radii = c.list("radii");
  const auto rep = cyl_density_scan(res.field, upper, spec, {y0, 0.0, 0.0}, radii, lambda);
  const std::array<double, 2> window{c.num("fit_lo"), c.num("fit_hi")};
  const auto fv = fit_exponent(rep.V, radii, window);
  const auto fj = fit_exponent(rep.J, radii, window);
  Outcome out;
  out.pass = res.converged && lambda < w.lambda_star && fv.exponent >= 0.9 && fv.exponent <= 1.1 && fj.exponent <= 0.2;
  json rows = json::array();
  for (std::size_t i = 0; i < radii.size(); ++i)
    rows.push_back({{"R", radii[i]}, {"V", measured(rep.V[i], rep.cell_layer_bound[i])}, {"A", rep.A[i]}, {"J", rep.J[i]}});
  out.report = {{"connection_action", upper.action},
                {"eta", hyp.eta},
                {"lambda_star", w.lambda_star},
                {"lambda", lambda},
                {"converged", res.converged},
                {"iterations", res.iterations},
                {"residual", measured(res.residual, sched.tol)},
                {"y0", y0},
                {"modified_energy", p.modified_energy},
                {"direct_energy", p.direct_energy},
                {"radii", rows},
                {"V_exponent", measured(fv.exponent, 0.1)},
                {"J_exponent", measured(fj.exponent, 0.2)}};
  out.summary = "V exponent " + fmt(fv.exponent) + ", modified-energy exponent " + fmt(fj.exponent) + ", eta " +
                fmt(hyp.eta) + ", lambda* " + fmt(w.lambda_star);
  return out;
}

// ------------------------------------------------------------------ 8

Outcome linking(Config& c) {
  const auto spec = PotentialSpec::two_well();
  const double R = c.num("radius"), h = c.num("h");
  const double t1 = c.num("t1"), t2 = c.num("t2");
  const auto eps = c.list("eps");
  const std::vector<double> lo{-1.0}, hi{1.0};
  const double gamma = 0.5 * std::abs(hi[0] - lo[0]);
  const Field data = two_arc_disk(R, h, t1, t2, hi, lo);
  const auto ref = ReferencePartition::chord({0, 0}, R, t1, t2);
  const auto oracle = brute_force_chord(ref, c.num("lattice"));
  DescentSchedule sched;
  sched.tol = c.num("descent_tol");
  const auto steps = eps_continuation(data, eps, spec, sched);
  Outcome out;
  out.pass = oracle.chord_minimal;
  json rows = json::array();
  double prev = 1e300;
  for (const auto& s : steps) {
    const auto ls = extract_levelset(s.field, lo, gamma);
    const auto full = hausdorff_to_reference(ls, ref, h / 2);
    const auto inner = hausdorff_to_reference(ls, ref, h / 2, 4 * s.epsilon);
    rows.push_back({{"eps", s.epsilon},
                    {"converged", s.converged},
                    {"iterations", s.iterations},
                    {"hausdorff", measured(full.distance, 2 * s.epsilon + 2 * h)},
                    {"hausdorff_margin_4eps", inner.samples > 0 ? json(inner.distance) : json(nullptr)}});
    out.pass = out.pass && s.converged && full.distance <= prev;
    prev = full.distance;
  }
  out.pass = out.pass && prev <= 0.1 * R;
  out.report = {{"gamma", gamma},
                {"oracle",
                 {{"chord_length", oracle.chord_length},
                  {"best_length", oracle.best_length},
                  {"best_deviation", oracle.best_deviation},
                  {"competitors", oracle.competitors}}},
                {"steps", rows},
                {"final_bound", 0.1 * R}};
  std::string ds;
  for (const auto& r : rows) ds += (ds.empty() ? "" : ", ") + fmt(r["hausdorff"]["value"].get<double>());
  out.summary = "Hausdorff to chord [" + ds + "], final <= " + fmt(0.1 * R);
  return out;
}

// ------------------------------------------------------------------ 9

Outcome geodesic(Config& c) {
  const auto spec = PotentialSpec::two_well();
  const std::vector<double> a{-1.0}, b{1.0};
  const double d = geodesic_distance(spec, a, b, c.num("resolution"));
  const double rel = std::abs(d - kAction) / kAction;
  Outcome out;
  out.pass = rel <= 0.01;
  out.report = {{"distance", d}, {"oracle", kAction}, {"rel_error", measured(rel, 0.01)}};
  out.summary = "d(-1, 1) = " + fmt(d) + ", rel err " + fmt(rel);
  return out;
}

std::vector<Criterion> criteria() {
  return {
      {1, "connection fidelity", 10, "L = 10\nN = 2001\n", connection_fidelity},
      {2, "polar identity", 30, "h = 0.04,0.02,0.01\n", polar_identity},
      {3, "planar scaling", 300, "nodes = 256\nh = 0.3\nlambda = 1\nT = 2\nradii = 4:32:2\ndescent_tol = 1e-8\n",
       planar_scaling},
      {4, "liouville", 120, "h = 0.2\nradius = 8\nstarts = 8\namplitude = 0.1\ndescent_tol = 1e-8\n", liouville},
      {5, "exponential decay", 120, "half_width = 8\nhalf_length = 10\nh = 0.1\ncap = 0\ndescent_tol = 1e-9\n", decay},
      {6, "hyperbolicity and lambda*", 60, "L = 10\nN = 2001\ndirections = 16\nq_max = 1\nq_step = 0.025\nseed = 0\n",
       hyperbolicity_lambda},
      {7, "cylinder scaling", 300,
       "anisotropy = 0.05\nL = 8\nN = 81\nconnect_tol = 1e-9\ndirections = 16\nlambda_fraction = 0.5\nY = 48\nwidth = 2\n"
       "descent_tol = 1e-6\nradii = 2:32:1\nfit_lo = 8\nfit_hi = 32\n",
       cylinder_scaling},
      {8, "linking", 600,
       "radius = 1\nh = 0.02\nt1 = 0.5235987755982988\nt2 = 2.6179938779914944\neps = 0.2,0.1,0.05\nlattice = 0.05\n"
       "descent_tol = 1e-6\n",
       linking},
      {9, "geodesic distance", 10, "resolution = 0.001\n", geodesic},
  };
}

struct Pass {
  std::vector<bool> ok;
  std::vector<double> seconds;
};

Pass run_all(const fs::path& dir, const std::vector<Criterion>& list, bool print) {
  fs::create_directories(dir);
  Pass p;
  for (const auto& cr : list) {
    Config cfg = Config::parse(cr.params, "criterion " + std::to_string(cr.id));
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = cr.run(cfg);
    } catch (const std::exception& e) {
      out.pass = false;
      out.report = {{"error", e.what()}};
      out.summary = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json report{{"criterion", cr.id},
                {"name", cr.name},
                {"config_hash", cfg.hash()},
                {"config", cfg.resolved()},
                {"result", out.report},
                {"pass", out.pass}};
    const std::string stem = "criterion_" + std::to_string(cr.id);
    std::ofstream(dir / (stem + ".json"), std::ios::binary) << report.dump(2) << "\n";
    std::ofstream(dir / (stem + ".cfg"), std::ios::binary) << cfg.resolved();
    const bool ok = out.pass && secs <= cr.budget_s;
    p.ok.push_back(ok);
    p.seconds.push_back(secs);
    if (print)
      std::cout << (ok ? "PASS" : "FAIL") << " " << cr.id << " " << cr.name << ": " << out.summary << " ["
                << fmt(secs) << " s of " << cr.budget_s << " s]" << std::endl;
  }
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phaselab acceptance run"};
  std::string out = "acceptance";
  int threads = 1, rerun_threads = 2;
  std::vector<int> only;
  bool skip_rerun = false;
  app.add_option("--out", out, "report directory");
  app.add_option("--threads", threads, "worker threads for the first pass");
  app.add_option("--rerun-threads", rerun_threads, "worker threads for the determinism pass");
  app.add_option("--only", only, "run only these criteria (disables the determinism check)");
  app.add_flag("--skip-rerun", skip_rerun, "skip the determinism pass");
  CLI11_PARSE(app, argc, argv);

  auto list = criteria();
  if (!only.empty()) {
    std::erase_if(list, [&](const Criterion& c) { return std::find(only.begin(), only.end(), c.id) == only.end(); });
    skip_rerun = true;
  }
  set_thread_count(threads);
  const fs::path first = fs::path(out) / "run1";
  const auto p1 = run_all(first, list, true);
  bool all = std::all_of(p1.ok.begin(), p1.ok.end(), [](bool b) { return b; });

  if (!skip_rerun) {
    set_thread_count(rerun_threads);
    const fs::path second = fs::path(out) / "run2";
    run_all(second, list, false);
    std::vector<std::string> differ;
    for (const auto& cr : list)
      for (const char* ext : {".json", ".cfg"}) {
        const std::string name = "criterion_" + std::to_string(cr.id) + ext;
        if (slurp(first / name) != slurp(second / name)) differ.push_back(name);
      }
    const bool ok = differ.empty();
    std::string detail = ok ? "all " + std::to_string(2 * list.size()) + " report files identical" : "differ:";
    for (const auto& d : differ) detail += " " + d;
    std::cout << (ok ? "PASS" : "FAIL") << " 10 determinism: " << detail << " (threads " << threads << " vs "
              << rerun_threads << ")" << std::endl;
    all = all && ok;
  }
  return all ? 0 : 1;
}

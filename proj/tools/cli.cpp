#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "phaselab/config.hpp"
#include "phaselab/connection1d.hpp"
#include "phaselab/density.hpp"
#include "phaselab/error.hpp"
#include "phaselab/linking.hpp"
#include "phaselab/minimizer.hpp"
#include "phaselab/parallel.hpp"
#include "phaselab/potentials.hpp"
#include "phaselab/scenarios.hpp"
#include "phaselab/snapshot.hpp"

#ifndef PHASELAB_VERSION
#define PHASELAB_VERSION "0.0.0"
#endif

namespace phaselab::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct MissingInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LambdaTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Run {
  std::string command;
  std::string config_path;
  Config config;
  fs::path out;
  bool deterministic = false;
  int threads = 1;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  fs::path file(const std::string& name) {
    outputs.push_back(name);
    return out / name;
  }
  void write_text(const std::string& name, const std::string& text) {
    std::ofstream os(file(name), std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (out / name).string());
    os << text;
  }
  void write_json(const std::string& name, const json& j) { write_text(name, j.dump(2) + "\n"); }
};

json measured(double value, double tolerance) { return json{{"value", value}, {"tolerance", tolerance}}; }

std::string hex64(std::uint64_t x) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << x;
  return os.str();
}

const std::set<std::string> kPotentialKeys{"potential", "wells", "alpha", "scale", "anisotropy"};
const std::set<std::string> kScheduleKeys{"descent_tol", "max_iters", "dt", "dt_rule", "log_every", "seed"};
const std::set<std::string> kConnectionKeys{"L", "N", "connect_dt", "connect_tol", "connect_iters", "bias"};

std::set<std::string> keys(std::initializer_list<std::set<std::string>> groups, std::set<std::string> extra) {
  extra.insert("output");
  for (const auto& g : groups) extra.insert(g.begin(), g.end());
  return extra;
}

std::string curve_csv(const Curve& c) {
  std::ostringstream os;
  os.precision(17);
  os << "s";
  for (int k = 0; k < c.m; ++k) os << ",u" << k;
  os << "\n";
  for (int i = 0; i < c.N; ++i) {
    os << c.s(i);
    for (int k = 0; k < c.m; ++k) os << ',' << c.at(i)[k];
    os << "\n";
  }
  return os.str();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingInput("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------- solve

int cmd_solve(Run& r) {
  Config& c = r.config;
  c.reject_unknown(keys({kPotentialKeys, kScheduleKeys},
                        {"dim", "shape", "h", "domain", "radius", "bc", "init", "noise", "eps", "symmetric"}));
  const auto spec = potential_from_config(c);
  const Field f0 = field_from_config(c, spec);
  const auto sched = schedule_from_config(c);
  const double eps = c.num("eps", 1.0);
  if (!(eps > 0.0)) throw ConfigError("key 'eps': must be positive");
  const bool symmetric = c.flag("symmetric", false);
  const auto res = symmetric ? descend_symmetric(f0, spec, sched, eps) : descend(f0, spec, sched, eps);

  write_snapshot(r.file("field.fld").string(), res.field);
  r.write_text("log.csv", res.log.to_csv());
  json wells = json::array();
  for (const auto& a : spec.wells)
    wells.push_back({{"well", a}, {"sup_deviation", sup_deviation(res.field, a, RegionMask::all(res.field))}});
  bool monotone = true;
  for (std::size_t i = 1; i < res.log.rows.size(); ++i)
    monotone = monotone && res.log.rows[i].energy <= res.log.rows[i - 1].energy;
  r.write_json("solve.json", json{{"converged", res.converged},
                                  {"stop_reason", res.stop_reason},
                                  {"iterations", res.iterations},
                                  {"rejected", res.rejected},
                                  {"energy", res.energy},
                                  {"residual", measured(res.residual, sched.tol)},
                                  {"energy_monotone", monotone},
                                  {"pinned", res.pinned},
                                  {"wells", wells}});
  if (!res.converged) {
    std::cerr << "no convergence: " << res.stop_reason << " (residual " << res.residual << ")\n";
    return kNoConvergence;
  }
  return kOk;
}

// ---------------------------------------------------------------- measure

json fit_json(const std::vector<double>& values, const std::vector<double>& radii, std::array<double, 2> window) {
  try {
    const auto f = fit_exponent(values, radii, window);
    return json{{"exponent", measured(f.exponent, f.residual)},
                {"intercept", f.intercept},
                {"window", {f.window[0], f.window[1]}},
                {"used", f.used},
                {"excluded", f.excluded}};
  } catch (const DegenerateWindow& e) {
    return json{{"exponent", nullptr}, {"reason", e.what()}};
  }
}

int cmd_measure(Run& r) {
  Config& c = r.config;
  c.reject_unknown(keys({kPotentialKeys},
                        {"snapshot", "well", "center", "radii", "lambda", "T", "c2", "fit_lo", "fit_hi", "eps"}));
  const auto spec = potential_from_config(c);
  const std::string snap = c.str("snapshot");
  if (!fs::exists(snap)) throw MissingInput("snapshot '" + snap + "' not found");
  r.inputs.push_back(snap);
  const Field f = read_snapshot(snap);
  if (f.m() != spec.m) throw ConfigError("snapshot has " + std::to_string(f.m()) + " components, potential has " +
                                         std::to_string(spec.m));
  const long j = c.integer("well", 0);
  if (j < 0 || j >= static_cast<long>(spec.wells.size())) throw ConfigError("key 'well': no such well");
  const auto& a = spec.wells[j];
  const auto cv = c.list("center", {0.0});
  std::array<double, 3> center{0, 0, 0};
  for (std::size_t k = 0; k < cv.size() && k < 3; ++k) center[k] = cv[k];
  const auto radii = c.list("radii");
  ScanOptions so;
  so.shell_width = c.num("T", 0.0);
  so.eps = c.num("eps", 1.0);
  const double lambda = c.num("lambda", 0.5);
  const auto rep = scan(f, a, center, radii, lambda, spec, so);
  const std::array<double, 2> window{c.num("fit_lo", radii.front()), c.num("fit_hi", radii.back())};

  std::ostringstream csv;
  csv.precision(17);
  csv << "R,V,A,J,cell_layer_bound\n";
  for (std::size_t i = 0; i < radii.size(); ++i)
    csv << radii[i] << ',' << rep.V[i] << ',' << rep.A[i] << ',' << rep.J[i] << ',' << rep.cell_layer_bound[i] << "\n";
  r.write_text("density.csv", csv.str());

  json out{{"n", rep.n}, {"h", rep.h}, {"lambda", rep.lambda}, {"T", rep.T}};
  json rows = json::array();
  for (std::size_t i = 0; i < radii.size(); ++i)
    rows.push_back({{"R", radii[i]},
                    {"V", measured(rep.V[i], rep.cell_layer_bound[i])},
                    {"A", rep.A[i]},
                    {"J", rep.J[i]}});
  out["radii"] = rows;
  out["fit_V"] = fit_json(rep.V, radii, window);
  out["fit_J"] = fit_json(rep.J, radii, window);
  const auto sch = difference_scheme_check(rep, c.num("c2", 0.5));
  out["scheme"] = {{"c_lambda", sch.c_lambda}, {"c0", sch.c0},         {"claim_threshold", sch.claim_threshold},
                   {"claim_holds", sch.claim_holds}, {"vacuous", sch.vacuous}, {"pass", sch.pass}};
  const auto lb = lower_bound_check(rep);
  out["lower_bound"] = {{"c", lb.c},           {"monotone", lb.monotone}, {"worst_drop", lb.worst_drop},
                        {"violation", lb.violation}, {"skipped", lb.skipped}, {"pass", lb.pass}};
  r.write_json("measure.json", out);
  return kOk;
}

// ---------------------------------------------------------------- connect

int cmd_connect(Run& r) {
  Config& c = r.config;
  c.reject_unknown(keys({kPotentialKeys, kConnectionKeys}, {"directions", "q_max", "q_step", "seed"}));
  const auto spec = potential_from_config(c);
  const auto opts = connection_options_from_config(c);
  const auto e = solve_connection(spec, opts);
  r.write_text("connection.csv", curve_csv(e.curve));

  json out{{"L", e.curve.L},
           {"N", e.curve.N},
           {"a_minus", e.a_minus},
           {"a_plus", e.a_plus},
           {"action", e.action},
           {"residual", measured(e.residual, opts.tol)},
           {"iterations", e.iterations},
           {"tail", {{"k", e.k}, {"K", e.K}}}};
  const auto hyp = hyperbolicity(e, spec, false);
  out["eta"] = measured(hyp.eta, 1e-8 * std::max(1.0, std::abs(hyp.eta)));
  out["hyperbolic"] = hyp.hyperbolic;
  if (!hyp.hyperbolic) {
    r.write_json("connect.json", out);
    std::cerr << "connection is not hyperbolic: eta = " << hyp.eta << "\n";
    return kHypothesis;
  }
  WqqOptions wo;
  wo.directions = static_cast<int>(c.integer("directions", 16));
  wo.seed = static_cast<std::uint64_t>(c.integer("seed", 0));
  const double qmax = c.num("q_max", 1.0), qstep = c.num("q_step", 0.025);
  if (!(qmax > 0.0) || !(qstep > 0.0) || wo.directions < 1) throw ConfigError("q_max, q_step, directions must be positive");
  for (long i = 0; i * qstep <= qmax + 1e-12; ++i) wo.q_scan.push_back(i * qstep);
  const auto w = wqq_check(e, spec, wo);
  double worst = 0.0;
  for (std::size_t d = 0; d < w.dqq0.size(); ++d)
    worst = std::max(worst, std::abs(w.dqq0[d] - w.form0[d]) / std::abs(w.form0[d]));
  out["c0"] = w.c0;
  out["q_bar"] = measured(w.q_bar, qstep);
  out["lambda_star"] = w.lambda_star;
  out["m1"] = w.m1;
  out["dqq0_vs_form_rel"] = measured(worst, 1e-3);
  out["richardson_gap"] = w.richardson_gap;
  out["q_scan"] = w.q_scan;
  out["inf_dqq"] = w.inf_dqq;
  r.write_json("connect.json", out);
  return kOk;
}

// ---------------------------------------------------------------- cyl

ConnectionProfile load_connection(const fs::path& dir, const PotentialSpec& spec, json& report) {
  const fs::path rp = dir / "connect.json", cp = dir / "connection.csv";
  if (!fs::exists(rp) || !fs::exists(cp)) throw MissingInput("no connection in '" + dir.string() + "': run connect first");
  report = json::parse(read_file(rp));
  if (!report.contains("lambda_star"))
    throw MissingInput("'" + rp.string() + "' has no lambda_star: the effective-potential check did not run");
  ConnectionProfile e;
  e.curve.L = report["L"].get<double>();
  e.curve.N = report["N"].get<int>();
  e.curve.m = spec.m;
  e.a_minus = report["a_minus"].get<std::vector<double>>();
  e.a_plus = report["a_plus"].get<std::vector<double>>();
  e.action = report["action"].get<double>();
  std::istringstream in(read_file(cp));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string cell;
    std::getline(ls, cell, ',');
    while (std::getline(ls, cell, ',')) e.curve.values.push_back(std::stod(cell));
  }
  if (e.curve.values.size() != static_cast<std::size_t>(e.curve.N) * e.curve.m)
    throw FormatError("connection.csv does not match connect.json");
  return e;
}

int cmd_cyl(Run& r) {
  Config& c = r.config;
  c.reject_unknown(keys({kScheduleKeys}, {"connection", "lambda", "Y", "width", "radii", "fit_lo", "fit_hi", "center"}));
  const fs::path dir = c.str("connection");
  Config upstream = Config::load((dir / "resolved.cfg").string());
  const auto spec = potential_from_config(upstream);
  json up;
  const auto e = load_connection(dir, spec, up);
  r.inputs.push_back((dir / "connect.json").string());
  r.inputs.push_back((dir / "connection.csv").string());
  const double lambda_star = up["lambda_star"].get<double>();
  const double lambda = c.num("lambda", 0.5 * lambda_star);
  if (!(lambda > 0.0)) throw ConfigError("key 'lambda': must be positive");
  if (lambda >= lambda_star) {
    std::ostringstream os;
    os << "lambda = " << lambda << " is not below lambda* = " << lambda_star;
    throw LambdaTooLarge(os.str());
  }
  const auto sched = schedule_from_config(c);
  const double Y = c.num("Y", 24.0), width = c.num("width", 2.0);
  const auto lower = mirror_connection(e);
  const Field f0 = cylinder_transition(lower, e, Y, width);
  const auto res = descend_symmetric(f0, spec, sched);
  write_snapshot(r.file("field.fld").string(), res.field);
  r.write_text("log.csv", res.log.to_csv());
  if (!res.converged) {
    r.write_json("cyl.json", json{{"converged", false}, {"stop_reason", res.stop_reason}, {"residual", res.residual}});
    std::cerr << "no convergence: " << res.stop_reason << "\n";
    return kNoConvergence;
  }
  const auto radii = c.list("radii", {2, 4, 6, 8, 10, 12, 14, 16});
  // center = level puts the balls where q crosses lambda; a number fixes y0.
  const std::string center = c.str("center", "level");
  double y0 = 0.0;
  if (center == "level") {
    y0 = level_crossing(cyl_polar(res.field, e, spec), lambda);
  } else {
    Config one = Config::parse("y0 = " + center, "center");
    y0 = one.num("y0");
  }
  const auto rep = cyl_density_scan(res.field, e, spec, {y0, 0.0, 0.0}, radii, lambda);
  const std::array<double, 2> window{c.num("fit_lo", radii.front()), c.num("fit_hi", radii.back())};
  const auto probe = product_structure_probe(res.field, e);
  json rows = json::array();
  std::ostringstream csv;
  csv.precision(17);
  csv << "R,V,A,J,cell_layer_bound\n";
  for (std::size_t i = 0; i < radii.size(); ++i) {
    rows.push_back({{"R", radii[i]}, {"V", measured(rep.V[i], rep.cell_layer_bound[i])}, {"A", rep.A[i]}, {"J", rep.J[i]}});
    csv << radii[i] << ',' << rep.V[i] << ',' << rep.A[i] << ',' << rep.J[i] << ',' << rep.cell_layer_bound[i] << "\n";
  }
  r.write_text("cyl.csv", csv.str());
  r.write_json("cyl.json", json{{"converged", true},
                                {"iterations", res.iterations},
                                {"residual", measured(res.residual, sched.tol)},
                                {"lambda", lambda},
                                {"lambda_star", lambda_star},
                                {"y0", y0},
                                {"radii", rows},
                                {"fit_V", fit_json(rep.V, radii, window)},
                                {"fit_J", fit_json(rep.J, radii, window)},
                                {"product", {{"max_deviation", probe.max_deviation}, {"rigid", probe.rigid}}}});
  return kOk;
}

// ---------------------------------------------------------------- link

int cmd_link(Run& r) {
  Config& c = r.config;
  c.reject_unknown(keys({kPotentialKeys, kScheduleKeys},
                        {"shape", "radius", "h", "t1", "t2", "eps", "gamma", "margin_factor", "starts", "amplitude",
                         "lattice"}));
  const auto spec = potential_from_config(c);
  if (spec.wells.size() != 2) throw ConfigError("link needs a two-well potential");
  const std::string shape = c.str("shape", "disk");
  if (shape != "disk") throw ConfigError("key 'shape': only disk is supported");
  const double R = c.num("radius", 1.0), h = c.num("h", 0.01);
  const double t1 = c.num("t1", std::numbers::pi / 6), t2 = c.num("t2", 5 * std::numbers::pi / 6);
  const auto eps = c.list("eps", {0.2, 0.1, 0.05});
  const auto& a1 = spec.wells[0];
  const auto& a2 = spec.wells[1];
  double sep = 0.0;
  for (int k = 0; k < spec.m; ++k) sep += std::pow(a1[k] - a2[k], 2);
  const double gamma = c.num("gamma", 0.5 * std::sqrt(sep));
  const double margin_factor = c.num("margin_factor", 4.0);
  ContinuationOptions co;
  co.starts = static_cast<int>(c.integer("starts", 1));
  co.amplitude = c.num("amplitude", 0.05);
  const auto sched = schedule_from_config(c);
  co.seed = sched.seed;

  const Field data = two_arc_disk(R, h, t1, t2, a2, a1);
  const auto ref = ReferencePartition::chord({0.0, 0.0}, R, t1, t2);
  const auto oracle = brute_force_chord(ref, c.num("lattice", R / 20));
  const auto steps = eps_continuation(data, eps, spec, sched, co);

  json table = json::array();
  bool all_converged = true;
  double prev = std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    all_converged = all_converged && s.converged;
    json row{{"eps", s.epsilon}, {"converged", s.converged}, {"iterations", s.iterations}, {"energy", s.energy}};
    try {
      auto ls = extract_levelset(s.field, a1, gamma);
      ls.epsilon = s.epsilon;
      r.write_text("levelset_" + std::to_string(i) + ".csv", ls.to_csv());
      const auto full = hausdorff_to_reference(ls, ref, h / 2);
      const auto inner = hausdorff_to_reference(ls, ref, h / 2, margin_factor * s.epsilon);
      row["hausdorff"] = measured(full.distance, 2 * s.epsilon + 2 * h);
      row["hausdorff_margin"] = measured(inner.distance, 2 * s.epsilon + 2 * h);
      row["length"] = ls.length();
      monotone = monotone && full.distance <= prev;
      prev = full.distance;
    } catch (const EmptyLevelSet& e) {
      row["hausdorff"] = nullptr;
      row["reason"] = e.what();
      monotone = false;
    }
    table.push_back(row);
  }
  r.write_json("link.json", json{{"radius", R},
                                 {"h", h},
                                 {"gamma", gamma},
                                 {"chord", {{"p1", ref.p1}, {"p2", ref.p2}}},
                                 {"oracle",
                                  {{"chord_length", oracle.chord_length},
                                   {"best_length", oracle.best_length},
                                   {"best_deviation", measured(oracle.best_deviation, c.num("lattice"))},
                                   {"competitors", oracle.competitors},
                                   {"chord_minimal", oracle.chord_minimal}}},
                                 {"steps", table},
                                 {"monotone", monotone}});
  return all_converged ? kOk : kNoConvergence;
}

// ---------------------------------------------------------------- hypcheck

int cmd_hypcheck(Run& r) {
  Config& c = r.config;
  c.reject_unknown(keys({kPotentialKeys, kConnectionKeys}, {"samples", "directions", "rays", "seed", "pad"}));
  const auto spec = potential_from_config(c);
  HypothesisOptions ho;
  ho.directions = static_cast<int>(c.integer("directions", 64));
  ho.radii = static_cast<int>(c.integer("rays", 32));
  ho.seed = static_cast<std::uint64_t>(c.integer("seed", 0));
  const auto rep = check_hypotheses(spec, default_box(spec, c.num("pad", 0.5)), static_cast<int>(c.integer("samples", 4096)), ho);
  json wells = json::array();
  for (const auto& w : rep.wells)
    wells.push_back({{"well", w.well}, {"value", w.value}, {"c_star", w.c_star}, {"c0", w.c0}});
  json out{{"samples", rep.samples},
           {"rho0", rep.rho0},
           {"min_sampled_value", rep.min_sampled_value},
           {"positivity_gap", rep.positivity_gap},
           {"wells", wells},
           {"symmetric", rep.symmetric},
           {"symmetry_defect", rep.symmetry_defect}};
  int code = kOk;
  const bool quadratic = spec.form != PotentialForm::PowerProduct || spec.alpha >= 2.0;
  if (spec.symmetric && quadratic) {
    const auto e = solve_connection(spec, connection_options_from_config(c));
    const auto hyp = hyperbolicity(e, spec, false);
    out["connection"] = {{"action", e.action}, {"eta", hyp.eta}, {"hyperbolic", hyp.hyperbolic}};
    if (!hyp.hyperbolic) code = kHypothesis;
  }
  r.write_json("hypcheck.json", out);
  return code;
}

int dispatch(Run& r) {
  if (r.command == "solve") return cmd_solve(r);
  if (r.command == "measure") return cmd_measure(r);
  if (r.command == "connect") return cmd_connect(r);
  if (r.command == "cyl") return cmd_cyl(r);
  if (r.command == "link") return cmd_link(r);
  return cmd_hypcheck(r);
}

int env_threads() {
  if (const char* s = std::getenv("PHASELAB_THREADS")) {
    const int t = std::atoi(s);
    if (t > 0) return t;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"phaselab: numerical experiments for the vector Allen-Cahn system"};
  app.name("phaselab");
  app.require_subcommand(1);
  int threads = 0;
  bool deterministic = false;
  long long seed = -1;
  app.add_option("--threads", threads, "worker threads (default: PHASELAB_THREADS or all cores)");
  app.add_flag("--deterministic", deterministic, "record deterministic mode in the manifest");
  app.add_option("--seed", seed, "override the config seed");

  std::string config_path, out_dir;
  std::vector<std::string> sets;
  const std::pair<const char*, const char*> commands[] = {
      {"solve", "minimize the energy from boundary data"},
      {"measure", "density scan, exponent fits and scheme checks on a snapshot"},
      {"connect", "1-D connection, hyperbolicity and lambda*"},
      {"cyl", "cylinder transition between two connections"},
      {"link", "epsilon continuation on a disk and level-set distance to the chord"},
      {"hypcheck", "check well hypotheses and connection hyperbolicity"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", config_path, "key = value config file")->required();
    sub->add_option("-o,--out", out_dir, "output directory (overrides 'output')");
    sub->add_option("--set", sets, "extra key=value assignment");
  }
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  Run r;
  r.command = app.get_subcommands().front()->get_name();
  r.config_path = config_path;
  r.deterministic = deterministic;
  r.threads = threads > 0 ? threads : env_threads();
  set_thread_count(r.threads);
  const auto t0 = std::chrono::steady_clock::now();
  int code = kOk;
  try {
    r.config = Config::load(config_path);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      r.config.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (seed >= 0) r.config.set("seed", std::to_string(seed));
    // --out is not recorded, so reruns into another directory resolve identically.
    r.out = out_dir.empty() ? fs::path(r.config.str("output", ".")) : fs::path(out_dir);
    fs::create_directories(r.out);
    r.inputs.push_back(config_path);
    code = dispatch(r);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kConfig;
  } catch (const MissingInput& e) {
    std::cerr << e.what() << "\n";
    return kMissingInput;
  } catch (const OutOfDomain& e) {
    std::cerr << e.what() << "\n";
    return kMissingInput;
  } catch (const NoConvergence& e) {
    std::cerr << e.what() << "\n";
    code = kNoConvergence;
  } catch (const NotHyperbolic& e) {
    std::cerr << e.what() << "\n";
    code = kHypothesis;
  } catch (const HypothesisViolated& e) {
    std::cerr << e.what() << "\n";
    code = kHypothesis;
  } catch (const LambdaTooLarge& e) {
    std::cerr << e.what() << "\n";
    return kLambdaTooLarge;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    r.write_text("resolved.cfg", r.config.resolved());
    json manifest{{"tool", "phaselab"},
                  {"version", PHASELAB_VERSION},
                  {"command", r.command},
                  {"config_hash", hex64(r.config.hash())},
                  {"deterministic", r.deterministic},
                  {"threads", r.threads},
                  {"wall_time_s", wall},
                  {"exit_code", code},
                  {"inputs", r.inputs},
                  {"outputs", r.outputs}};
    std::ofstream(r.out / "manifest.json", std::ios::binary) << manifest.dump(2) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error writing manifest: " << e.what() << "\n";
    return kFailure;
  }
  return code;
}

}  // namespace phaselab::cli

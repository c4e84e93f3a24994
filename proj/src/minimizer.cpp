#include "phaselab/minimizer.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "phaselab/parallel.hpp"
#include "phaselab/rng.hpp"

namespace phaselab {

double stability_bound(const Grid& g, double eps) {
  return g.h * g.h / (2.0 * g.n * eps * eps);
}

std::string ConvergenceLog::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "iter,dt,energy,residual\n";
  for (const auto& r : rows) os << r.iter << ',' << r.dt << ',' << r.energy << ',' << r.residual << '\n';
  return os.str();
}

namespace {

// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    const double t = sum + x;
    c += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

struct Evaluation {
  double energy = 0.0;
  double residual = 0.0;
  std::size_t pinned = 0;
};

// Discrete energy written as per-node and per-edge weights, so that the
// descent kernel evaluates energy, force and residual in a single sweep.
class FlowKernel {
 public:
  FlowKernel(const Field& shape, const PotentialSpec& spec, double eps)
      : f_(shape), spec_(spec), eps2_(eps * eps), g_(shape.grid()), n_(g_.n), m_(shape.m()), N_(shape.size()) {
    node_w_.assign(N_, 0.0);
    edge_w_.assign(static_cast<std::size_t>(n_) * N_, 0.0);
    const int corners = 1 << n_;
    std::array<std::size_t, 8> offset{};
    for (int b = 0; b < corners; ++b)
      for (int a = 0; a < n_; ++a)
        if (b & (1 << a)) offset[b] += g_.stride(a);
    const double vol = g_.cell_volume();
    const double per_node = vol / corners;
    const double per_edge = vol / (corners / 2) * 0.5 / (g_.h * g_.h);
    for (std::size_t i = 0; i < N_; ++i) {
      const auto c = g_.unravel(i);
      bool ok = true;
      for (int a = 0; a < n_ && ok; ++a) ok = c[a] + 1 < g_.shape[a];
      for (int k = 0; k < corners && ok; ++k) ok = shape.active(i + offset[k]);
      if (!ok) continue;
      for (int k = 0; k < corners; ++k) {
        node_w_[i + offset[k]] += per_node;
        for (int a = 0; a < n_; ++a)
          if (!(k & (1 << a))) edge_w_[a * N_ + i + offset[k]] += per_edge;
      }
    }
    dead_core_ = spec.alpha < 2.0;
  }

  Evaluation evaluate(const std::vector<double>& u, std::vector<double>& force,
                      std::vector<std::uint8_t>& pinned) const {
    const std::size_t chunks = (N_ + kChunk - 1) / kChunk;
    std::vector<double> e_part(chunks, 0.0), r_part(chunks, 0.0);
    std::vector<std::size_t> p_part(chunks, 0);
    const double inv_h2 = 1.0 / (g_.h * g_.h);
    parallel_for(N_, [&](std::size_t b, std::size_t e) {
      CompensatedSum energy;
      double res = 0.0;
      std::size_t pins = 0;
      double grad[kMaxComponents], lap[kMaxComponents];
      for (std::size_t i = b; i < e; ++i) {
        const std::span<const double> ui(u.data() + i * m_, m_);
        if (node_w_[i] != 0.0) energy.add(node_w_[i] * eval_w(spec_, ui));
        for (int a = 0; a < n_; ++a) {
          const double w = edge_w_[a * N_ + i];
          if (w == 0.0) continue;
          const std::size_t j = i + g_.stride(a);
          double s = 0.0;
          for (int k = 0; k < m_; ++k) {
            const double d = u[j * m_ + k] - u[i * m_ + k];
            s += d * d;
          }
          energy.add(eps2_ * w * s);
        }
        pinned[i] = 0;
        if (f_.tag(i) != NodeTag::Interior) {
          for (int k = 0; k < m_; ++k) force[i * m_ + k] = 0.0;
          continue;
        }
        for (int k = 0; k < m_; ++k) lap[k] = -2.0 * n_ * u[i * m_ + k];
        for (int a = 0; a < n_; ++a) {
          const std::size_t s = g_.stride(a);
          for (int k = 0; k < m_; ++k) lap[k] += u[(i + s) * m_ + k] + u[(i - s) * m_ + k];
        }
        if (dead_core_ && nearest_well(spec_, ui).second < spec_.q_min) {
          pinned[i] = 1;
          ++pins;
          for (int k = 0; k < m_; ++k) force[i * m_ + k] = eps2_ * lap[k] * inv_h2;
          continue;
        }
        eval_w_grad(spec_, ui, std::span<double>(grad, m_));
        double s = 0.0;
        for (int k = 0; k < m_; ++k) {
          const double fk = eps2_ * lap[k] * inv_h2 - grad[k];
          force[i * m_ + k] = fk;
          s += fk * fk;
        }
        res = std::max(res, std::sqrt(s));
      }
      const std::size_t c = b / kChunk;
      e_part[c] = energy.value();
      r_part[c] = res;
      p_part[c] = pins;
    });
    Evaluation ev;
    for (std::size_t c = 0; c < chunks; ++c) {
      ev.energy += e_part[c];
      ev.residual = std::max(ev.residual, r_part[c]);
      ev.pinned += p_part[c];
    }
    return ev;
  }

  void step(const std::vector<double>& u, const std::vector<double>& force,
            const std::vector<std::uint8_t>& pinned, double dt, std::vector<double>& out) const {
    parallel_for(N_, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const std::size_t o = i * m_;
        if (f_.tag(i) != NodeTag::Interior) {
          for (int k = 0; k < m_; ++k) out[o + k] = u[o + k];
          continue;
        }
        for (int k = 0; k < m_; ++k) out[o + k] = u[o + k] + dt * force[o + k];
        if (!dead_core_) continue;
        const std::span<const double> ui(u.data() + o, m_);
        const auto [j, dist] = nearest_well(spec_, ui);
        const auto& a = spec_.wells[j];
        if (pinned[i]) {
          // Released only when the neighbours pull it out by more than q_min
          // and the pull still beats W_u at the released position.
          double pull = 0.0;
          for (int k = 0; k < m_; ++k) pull += (dt * force[o + k]) * (dt * force[o + k]);
          bool release = std::sqrt(pull) > spec_.q_min;
          if (release) {
            double trial[kMaxComponents], grad[kMaxComponents];
            for (int k = 0; k < m_; ++k) trial[k] = a[k] + dt * force[o + k];
            eval_w_grad(spec_, std::span<const double>(trial, m_), std::span<double>(grad, m_));
            double net = 0.0;
            for (int k = 0; k < m_; ++k) net += (force[o + k] - grad[k]) * force[o + k];
            release = net > 0.0;
            if (release)
              for (int k = 0; k < m_; ++k) out[o + k] = trial[k];
          }
          if (!release)
            for (int k = 0; k < m_; ++k) out[o + k] = a[k];
          continue;
        }
        double along = 0.0, after = 0.0;
        for (int k = 0; k < m_; ++k) {
          along += (out[o + k] - a[k]) * (u[o + k] - a[k]);
          after += (out[o + k] - a[k]) * (out[o + k] - a[k]);
        }
        if (along <= 0.0 || std::sqrt(after) < spec_.q_min)
          for (int k = 0; k < m_; ++k) out[o + k] = a[k];
      }
    });
  }

 private:
  const Field& f_;
  const PotentialSpec& spec_;
  double eps2_;
  const Grid& g_;
  int n_, m_;
  std::size_t N_;
  bool dead_core_ = false;
  std::vector<double> node_w_, edge_w_;
};

std::vector<std::size_t> mirror_map(const Field& f) {
  const Grid& g = f.grid();
  const double expected = -0.5 * g.h * (g.shape[0] - 1);
  if (std::abs(g.origin[0] - expected) > 1e-12 * std::max(1.0, std::abs(expected)))
    throw std::invalid_argument("symmetric descent: grid is not symmetric about x_1 = 0");
  std::vector<std::size_t> mirror(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto c = g.unravel(i);
    c[0] = g.shape[0] - 1 - c[0];
    mirror[i] = g.index(c[0], c[1], c[2]);
    if (f.tag(i) != f.tag(mirror[i])) throw std::invalid_argument("symmetric descent: mask is not symmetric");
  }
  return mirror;
}

void project_values(std::vector<double>& u, const std::vector<std::size_t>& mirror, const Field& shape) {
  const int m = shape.m();
  for (std::size_t i = 0; i < mirror.size(); ++i) {
    const std::size_t j = mirror[i];
    if (j < i || !shape.active(i)) continue;
    double* a = u.data() + i * m;
    double* b = u.data() + j * m;
    double v[kMaxComponents];
    v[0] = 0.5 * (a[0] - b[0]);
    for (int k = 1; k < m; ++k) v[k] = 0.5 * (a[k] + b[k]);
    for (int k = 0; k < m; ++k) a[k] = v[k];
    b[0] = -v[0];
    for (int k = 1; k < m; ++k) b[k] = v[k];
  }
}

DescentResult run_descent(const Field& f0, const PotentialSpec& spec, const DescentSchedule& sched,
                          double eps, const std::vector<std::size_t>* mirror) {
  if (!(eps > 0.0)) throw std::invalid_argument("descend: eps must be positive");
  if (spec.m != f0.m()) throw std::invalid_argument("descend: potential and field dimensions differ");
  if (!(sched.tol > 0.0)) throw std::invalid_argument("descend: tol must be positive");
  if (sched.max_iters < 0) throw std::invalid_argument("descend: max_iters must be >= 0");
  f0.validate();
  const double bound = stability_bound(f0.grid(), eps);
  const double dt0 = sched.dt0 == 0.0 ? bound : sched.dt0;
  if (!(dt0 > 0.0)) throw std::invalid_argument("descend: dt0 must be positive");
  if (dt0 > bound * (1.0 + 1e-12)) {
    std::ostringstream os;
    os.precision(6);
    os << "descend: dt0 = " << dt0 << " exceeds the stability bound h^2/(2 n eps^2) = " << bound;
    throw std::invalid_argument(os.str());
  }

  const FlowKernel kernel(f0, spec, eps);
  const std::size_t len = f0.values().size();
  std::vector<double> u = f0.values(), cand(len), force(len), cand_force(len);
  std::vector<std::uint8_t> pinned(f0.size()), cand_pinned(f0.size());
  if (mirror) project_values(u, *mirror, f0);

  DescentResult res;
  Evaluation ev = kernel.evaluate(u, force, pinned);
  double dt = dt0;
  const double dt_floor = dt0 * 1e-12;
  long accepted = 0;
  res.log.rows.push_back({0, dt, ev.energy, ev.residual});
  auto log_row = [&](long it) {
    if (res.log.rows.back().iter != it) res.log.rows.push_back({it, dt, ev.energy, ev.residual});
  };

  res.stop_reason = "max_iters";
  while (true) {
    if (ev.residual <= sched.tol) {
      res.converged = true;
      res.stop_reason = "tol";
      break;
    }
    if (accepted >= sched.max_iters) break;
    kernel.step(u, force, pinned, dt, cand);
    if (mirror) project_values(cand, *mirror, f0);
    const Evaluation next = kernel.evaluate(cand, cand_force, cand_pinned);
    const double slack = 8.0 * DBL_EPSILON * (std::abs(ev.energy) + std::abs(next.energy));
    if (sched.dt_rule == DtRule::Fixed || next.energy <= ev.energy + slack) {
      u.swap(cand);
      force.swap(cand_force);
      pinned.swap(cand_pinned);
      ev = next;
      ++accepted;
      if (sched.dt_rule == DtRule::Adaptive) dt = std::min(dt * 1.1, bound);
      if (sched.log_every > 0 && accepted % sched.log_every == 0) log_row(accepted);
    } else {
      ++res.rejected;
      dt *= 0.5;
      if (dt < dt_floor) {
        res.stop_reason = "stagnated";
        break;
      }
    }
  }
  log_row(accepted);
  res.iterations = accepted;
  res.energy = ev.energy;
  res.residual = ev.residual;
  res.pinned = ev.pinned;
  res.field = f0;
  res.field.values() = std::move(u);
  return res;
}

}  // namespace

DescentResult descend(const Field& f0, const PotentialSpec& spec, const DescentSchedule& sched, double eps) {
  return run_descent(f0, spec, sched, eps, nullptr);
}

DescentResult descend_symmetric(const Field& f0, const PotentialSpec& spec, const DescentSchedule& sched,
                                double eps) {
  if (!spec.symmetric) throw std::invalid_argument("symmetric descent needs a symmetric potential");
  const auto mirror = mirror_map(f0);
  return run_descent(f0, spec, sched, eps, &mirror);
}

void project_symmetric(Field& f) {
  const auto mirror = mirror_map(f);
  project_values(f.values(), mirror, f);
}

double symmetry_defect(const Field& f) {
  const auto mirror = mirror_map(f);
  double d = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f.active(i)) continue;
    const auto a = f.at(i), b = f.at(mirror[i]);
    d = std::max(d, std::abs(a[0] + b[0]));
    for (int k = 1; k < f.m(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  }
  return d;
}

MultistartResult multistart(const std::function<Field(std::uint64_t)>& init, const PotentialSpec& spec,
                            const DescentSchedule& sched, int starts, double eps) {
  if (starts < 1) throw std::invalid_argument("multistart: at least one start required");
  MultistartResult out;
  out.runs.resize(starts);
  parallel_tasks(static_cast<std::size_t>(starts), [&](std::size_t k) {
    out.runs[k] = descend(init(static_cast<std::uint64_t>(k)), spec, sched, eps);
  });
  for (int k = 0; k < starts; ++k) {
    out.energies.push_back(out.runs[k].energy);
    if (out.runs[k].energy < out.runs[out.best].energy) out.best = k;
  }
  return out;
}

Field noisy_start(const Field& f0, double amplitude, std::uint64_t seed) {
  Field f = f0;
  Rng rng = Rng(seed).split(0x5eed);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.tag(i) != NodeTag::Interior) continue;
    for (double& v : f.at(i)) v += rng.uniform(-amplitude, amplitude);
  }
  return f;
}

AuditReport audit_minimality(const Field& f, const PotentialSpec& spec, const MinimalityAudit& audit,
                             double eps) {
  if (audit.trials < 0) throw std::invalid_argument("audit: trials must be >= 0");
  if (!(audit.radius > 0.0)) throw std::invalid_argument("audit: radius must be positive");
  const Grid& g = f.grid();
  const int n = g.n, m = f.m();
  AuditReport rep;
  const RegionMask all = RegionMask::all(f);
  rep.energy = energy(f, all, spec, eps);
  rep.tol = audit.tol_rel * std::abs(rep.energy);

  // Bump centres keep the whole support on interior nodes.
  const auto boundary_dist =
      distance_to(f, [&](std::size_t i) { return f.tag(i) != NodeTag::Interior; });
  double radius = audit.radius;
  std::vector<std::size_t> centres;
  while (true) {
    centres.clear();
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f.tag(i) == NodeTag::Interior && boundary_dist[i] > radius) centres.push_back(i);
    if (!centres.empty() || radius < g.h) break;
    radius *= 0.5;
  }
  rep.radius = radius;
  if (centres.empty()) throw std::invalid_argument("audit: no interior room for a bump");

  Rng rng = Rng(audit.seed).split(0xa0d17);
  const int reach = static_cast<int>(std::ceil(radius / g.h)) + 1;
  rep.min_delta = std::numeric_limits<double>::infinity();
  for (int t = 0; t < audit.trials; ++t) {
    Rng tr = rng.split(static_cast<std::uint64_t>(t));
    const std::size_t centre = centres[static_cast<std::size_t>(tr.uniform() * centres.size()) % centres.size()];
    std::vector<double> dir(m);
    double norm = 0.0;
    for (auto& d : dir) {
      d = tr.normal();
      norm += d * d;
    }
    norm = std::sqrt(norm);
    const double amp = audit.amplitude * (tr.uniform() < 0.5 ? -1.0 : 1.0);

    const auto c = g.unravel(centre);
    const auto xc = g.coord(centre);
    std::vector<std::uint8_t> box(f.size(), 0);
    Field p = f;
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < n; ++a) {
      lo[a] = std::max(0, c[a] - reach);
      hi[a] = std::min(g.shape[a] - 1, c[a] + reach);
    }
    for (int i0 = lo[0]; i0 <= hi[0]; ++i0)
      for (int i1 = lo[1]; i1 <= hi[1]; ++i1)
        for (int i2 = lo[2]; i2 <= hi[2]; ++i2) {
          const std::size_t i = g.index(i0, i1, i2);
          box[i] = f.active(i);
          if (f.tag(i) != NodeTag::Interior) continue;
          const auto x = g.coord(i);
          double r2 = 0.0;
          for (int a = 0; a < n; ++a) r2 += (x[a] - xc[a]) * (x[a] - xc[a]);
          const double s2 = r2 / (radius * radius);
          if (s2 >= 1.0) continue;
          const double phi = std::exp(1.0 - 1.0 / (1.0 - s2));
          for (int k = 0; k < m; ++k) p.at(i)[k] += amp * phi * dir[k] / norm;
        }
    const RegionMask local(box, 0.0);
    const double delta = energy(p, local, spec, eps) - energy(f, local, spec, eps);
    rep.delta.push_back(delta);
    rep.min_delta = std::min(rep.min_delta, delta);
  }
  if (audit.trials == 0) rep.min_delta = 0.0;
  rep.pass = rep.min_delta >= -rep.tol;
  return rep;
}

}  // namespace phaselab

#include "solitonsim/evolver.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include "solitonsim/error.hpp"

namespace solitonsim::evolver {

using geometry::sphere::grad_potential;
using geometry::sphere::kE3;
using geometry::sphere::tangent_part;

std::string to_string(Scheme s) { return s == Scheme::leapfrog ? "leapfrog" : "rk4"; }

Scheme scheme_from_string(const std::string& s) {
  if (s == "leapfrog") return Scheme::leapfrog;
  if (s == "rk4") return Scheme::rk4;
  throw ValidationError("unknown scheme '" + s + "' (expected leapfrog or rk4)");
}

void SolverConfig::validate(const Grid1D& g) const {
  const double h = g.spacing();
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("solver: epsilon must be finite and >= 0");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("solver: dt must be > 0");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ValidationError("solver: t_end must be > 0");
  if (renormalize_every < 1) throw ValidationError("solver: renormalize_every must be >= 1");
  if (record_every < 1) throw ValidationError("solver: record_every must be >= 1");
  if (!(cfl_factor > 0.0) || cfl_factor > 0.5) {
    throw ValidationError("solver: cfl_factor must lie in (0, 0.5]");
  }
  if (dt > cfl_factor * h * (1.0 + 1e-12)) {
    throw ValidationError(
        fmt::format("solver: dt = {:.6g} violates the CFL guard dt <= {:.6g} (cfl_factor * h)", dt,
                    cfl_factor * h));
  }
  if (epsilon > 0.0 && dt > h * h / (4.0 * epsilon) * (1.0 + 1e-12)) {
    throw ValidationError(fmt::format(
        "solver: dt = {:.6g} violates the viscous guard dt <= h^2/(4 eps) = {:.6g}", dt,
        h * h / (4.0 * epsilon)));
  }
  if (!(instability_drift > 0.0)) throw ValidationError("solver: instability_drift must be > 0");
}

double constraint_drift(const GridField& u) {
  double m = 0.0;
  for (int i = 0; i < u.nodes(); ++i) m = std::max(m, std::abs(u.vec3(i).norm() - 1.0));
  return m;
}

double tangency_drift(const GridField& u, const GridField& v) {
  double m = 0.0;
  for (int i = 0; i < u.nodes(); ++i) m = std::max(m, std::abs(u.vec3(i).dot(v.vec3(i))));
  return m;
}

MapState make_state(const GridField& u0, const GridField& u1, double t,
                    std::vector<std::string>* warnings) {
  const Grid1D& g = u0.shape().grid1d();
  if (u0.components() != 3 || u1.components() != 3 || !(u0.shape() == u1.shape())) {
    throw PreconditionError("make_state: u0 and u1 must be S^2-valued fields on the same grid");
  }
  MapState s(g);
  s.t = t;
  double max_normal = 0.0;
  for (int i = 0; i < g.n; ++i) {
    const Vec3 u = u0.vec3(i);
    if (std::abs(u.norm() - 1.0) > geometry::kUnitTol) {
      throw PreconditionError(fmt::format("make_state: u0 at node {} has |u| = {:.17g}", i, u.norm()));
    }
    const Vec3 un = u.normalized();
    const Vec3 v = u1.vec3(i);
    max_normal = std::max(max_normal, std::abs(un.dot(v)));
    s.u.set(i, un);
    s.v.set(i, tangent_part(un, v));
  }
  if (max_normal > 1e-10 && warnings != nullptr) {
    warnings->push_back(fmt::format(
        "initial velocity not tangent (max |u.v| = {:.3g}); projected onto T_uS^2", max_normal));
  }
  return s;
}

void check_invariants(const MapState& s, double constraint_tol, double tangency_tol) {
  for (int i = 0; i < s.grid.n; ++i) {
    const Vec3 u = s.u.vec3(i);
    const Vec3 v = s.v.vec3(i);
    if (!u.allFinite() || !v.allFinite()) {
      throw PreconditionError(fmt::format("state: non-finite value at node {}", i));
    }
    if (std::abs(u.norm() - 1.0) > constraint_tol) {
      throw PreconditionError(fmt::format("state: node {} off the sphere (|u| - 1 = {:.3g})", i,
                                          u.norm() - 1.0));
    }
    if (std::abs(u.dot(v)) > tangency_tol) {
      throw PreconditionError(
          fmt::format("state: velocity at node {} not tangent (u.v = {:.3g})", i, u.dot(v)));
    }
  }
}

GridField acceleration_unchecked(const GridField& u, const GridField& v, double epsilon) {
  const int n = u.nodes();
  const double h = u.shape().grid1d().spacing();
  const double inv_h2 = 1.0 / (h * h);
  const double inv_2h = 0.5 / h;
  GridField a(u.shape(), 3);
  for (int i = 0; i < n; ++i) {
    const int ip = i + 1 == n ? 0 : i + 1;
    const int im = i == 0 ? n - 1 : i - 1;
    const Vec3 ui = u.vec3(i);
    const Vec3 up = u.vec3(ip);
    const Vec3 um = u.vec3(im);
    const Vec3 vi = v.vec3(i);
    const Vec3 lap = (up - 2.0 * ui + um) * inv_h2;
    const Vec3 ux = (up - um) * inv_2h;
    const double lambda = geometry::sphere::sff_coefficient(vi, ux);
    Vec3 acc = lap + lambda * ui - grad_potential(ui);
    if (epsilon > 0.0) {
      const Vec3 lapv = (v.vec3(ip) - 2.0 * vi + v.vec3(im)) * inv_h2;
      acc += epsilon * tangent_part(ui, lapv);
    }
    a.set(i, acc);
  }
  return a;
}

GridField acceleration(const MapState& state, double epsilon) {
  check_invariants(state);
  return acceleration_unchecked(state.u, state.v, epsilon);
}

namespace {

void check_drift(double drift, const SolverConfig& config, double t) {
  if (!(drift <= config.instability_drift)) {
    throw InstabilityError(fmt::format(
        "constraint drift {:.3g} before restoration at t = {:.6g} exceeds {:.3g}; reduce dt",
        drift, t, config.instability_drift));
  }
}

// Constrained leapfrog (RATTLE on S²): the drift is corrected along u_n by the
// multiplier solving |βu + w| = 1, the velocity is re-projected onto T_{u'}S².
MapState leapfrog_step(const MapState& s, const SolverConfig& config, double dt, bool restore,
                       StepDiagnostics& diag) {
  const int n = s.grid.n;
  const GridField a = acceleration_unchecked(s.u, s.v, config.epsilon);
  MapState out(s.grid);
  out.t = s.t + dt;
  double drift = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec3 u = s.u.vec3(i);
    const Vec3 w = dt * s.v.vec3(i) + 0.5 * dt * dt * a.vec3(i);
    const Vec3 pred = u + w;
    drift = std::max(drift, std::abs(pred.norm() - 1.0));
    if (!restore) {
      out.u.set(i, pred);
      continue;
    }
    const double uu = u.squaredNorm();
    const double uw = u.dot(w);
    const double disc = uw * uw - uu * (w.squaredNorm() - 1.0);
    if (!(disc >= 0.0)) {
      throw InstabilityError(fmt::format("no constraint-restoring multiplier at node {}", i));
    }
    const Vec3 un = (((-uw + std::sqrt(disc)) / uu) * u + w).normalized();
    out.u.set(i, un);
  }
  diag.pre_restoration_drift = drift;
  diag.restored = restore;
  check_drift(drift, config, s.t);

  const double inv_dt = 1.0 / dt;
  for (int i = 0; i < n; ++i) out.v.set(i, (out.u.vec3(i) - s.u.vec3(i)) * inv_dt);
  const GridField a2 = acceleration_unchecked(out.u, out.v, config.epsilon);
  for (int i = 0; i < n; ++i) {
    Vec3 v = out.v.vec3(i) + 0.5 * dt * a2.vec3(i);
    if (restore) v = tangent_part(out.u.vec3(i), v);
    out.v.set(i, v);
  }
  return out;
}

void axpy(std::vector<double>& y, const std::vector<double>& x, double alpha,
          const std::vector<double>& base) {
  for (size_t k = 0; k < y.size(); ++k) y[k] = base[k] + alpha * x[k];
}

MapState rk4_step(const MapState& s, const SolverConfig& config, double dt, bool restore,
                  StepDiagnostics& diag) {
  const double eps = config.epsilon;
  GridField ku1 = s.v;
  GridField kv1 = acceleration_unchecked(s.u, s.v, eps);

  GridField us(s.u.shape(), 3);
  GridField vs(s.u.shape(), 3);
  axpy(us.values(), ku1.values(), 0.5 * dt, s.u.values());
  axpy(vs.values(), kv1.values(), 0.5 * dt, s.v.values());
  GridField ku2 = vs;
  GridField kv2 = acceleration_unchecked(us, vs, eps);

  axpy(us.values(), ku2.values(), 0.5 * dt, s.u.values());
  axpy(vs.values(), kv2.values(), 0.5 * dt, s.v.values());
  GridField ku3 = vs;
  GridField kv3 = acceleration_unchecked(us, vs, eps);

  axpy(us.values(), ku3.values(), dt, s.u.values());
  axpy(vs.values(), kv3.values(), dt, s.v.values());
  GridField ku4 = vs;
  GridField kv4 = acceleration_unchecked(us, vs, eps);

  MapState out(s.grid);
  out.t = s.t + dt;
  const double c = dt / 6.0;
  auto& ou = out.u.values();
  auto& ov = out.v.values();
  for (size_t k = 0; k < ou.size(); ++k) {
    ou[k] = s.u.values()[k] + c * (ku1.values()[k] + 2.0 * ku2.values()[k] +
                                   2.0 * ku3.values()[k] + ku4.values()[k]);
    ov[k] = s.v.values()[k] + c * (kv1.values()[k] + 2.0 * kv2.values()[k] +
                                   2.0 * kv3.values()[k] + kv4.values()[k]);
  }
  const double drift = constraint_drift(out.u);
  diag.pre_restoration_drift = drift;
  diag.restored = restore;
  check_drift(drift, config, s.t);
  if (restore) {
    for (int i = 0; i < s.grid.n; ++i) {
      const Vec3 u = out.u.vec3(i).normalized();
      out.u.set(i, u);
      out.v.set(i, tangent_part(u, out.v.vec3(i)));
    }
  }
  return out;
}

}  // namespace

MapState step(const MapState& state, const SolverConfig& config, double dt, long step_index,
              StepDiagnostics* diag) {
  StepDiagnostics local;
  StepDiagnostics& d = diag != nullptr ? *diag : local;
  const bool restore = (step_index + 1) % config.renormalize_every == 0;
  return config.scheme == Scheme::leapfrog ? leapfrog_step(state, config, dt, restore, d)
                                           : rk4_step(state, config, dt, restore, d);
}

MapState step(const MapState& state, const SolverConfig& config) {
  config.validate(state.grid);
  return step(state, config, config.dt);
}

EnergyRecord energy_report(const MapState& state) {
  const int n = state.grid.n;
  const double h = state.grid.spacing();
  EnergyRecord r;
  r.t = state.t;
  double kin = 0.0;
  double dir = 0.0;
  double pot = 0.0;
  for (int i = 0; i < n; ++i) {
    const int ip = i + 1 == n ? 0 : i + 1;
    kin += state.v.vec3(i).squaredNorm();
    dir += (state.u.vec3(ip) - state.u.vec3(i)).squaredNorm();
    pot += state.u(i, 2);
  }
  r.kinetic = 0.5 * h * kin;
  r.dirichlet = 0.5 * dir / h;
  r.potential_integral = h * pot;
  r.hamiltonian = r.kinetic + r.dirichlet + r.potential_integral;
  r.constraint_drift = constraint_drift(state.u);
  r.tangency_drift = tangency_drift(state.u, state.v);
  if (r.constraint_drift <= geometry::kUnitTol) {
    r.h1_seminorm = grid::sobolev_seminorm(state.u, state.v, 1);
  } else {
    GridField un = state.u;
    for (int i = 0; i < n; ++i) un.set(i, un.vec3(i).normalized());
    r.h1_seminorm = grid::sobolev_seminorm(un, state.v, 1);
  }
  return r;
}

namespace {

bool finite_state(const MapState& s) {
  const auto ok = [](double x) { return std::isfinite(x); };
  return std::all_of(s.u.values().begin(), s.u.values().end(), ok) &&
         std::all_of(s.v.values().begin(), s.v.values().end(), ok);
}

}  // namespace

EvolveResult evolve(const MapState& initial, const SolverConfig& config,
                    const EvolveOptions& options) {
  config.validate(initial.grid);
  check_invariants(initial);

  EvolveResult result(initial);
  const long nsteps = std::max(1L, static_cast<long>(std::ceil(config.t_end / config.dt - 1e-9)));
  const double t0 = initial.t;

  auto record = [&](const MapState& s) {
    result.ledger.push_back(energy_report(s));
    if (options.on_record) options.on_record(s);
  };
  record(initial);
  if (options.snapshot_every > 0) result.snapshots.push_back(initial);

  MapState current = initial;
  for (long k = 1; k <= nsteps; ++k) {
    const double dt = k == nsteps ? config.t_end - (nsteps - 1) * config.dt : config.dt;
    StepDiagnostics diag;
    try {
      MapState next = step(current, config, dt, k - 1, &diag);
      next.t = k == nsteps ? t0 + config.t_end : t0 + k * config.dt;
      if (!finite_state(next)) {
        result.aborted = true;
        result.abort_time = current.t;
        result.abort_reason = fmt::format("non-finite value after step {}", k);
        break;
      }
      current = std::move(next);
    } catch (const InstabilityError& e) {
      result.aborted = true;
      result.abort_time = current.t;
      result.abort_reason = e.what();
      break;
    }
    result.steps = k;
    result.max_pre_restoration_drift =
        std::max(result.max_pre_restoration_drift, diag.pre_restoration_drift);
    if (diag.restored) {
      result.max_constraint_drift =
          std::max(result.max_constraint_drift, constraint_drift(current.u));
      result.max_tangency_drift =
          std::max(result.max_tangency_drift, tangency_drift(current.u, current.v));
    }
    if (k % config.record_every == 0 || k == nsteps) record(current);
    if (options.snapshot_every > 0 && k % options.snapshot_every == 0) {
      result.snapshots.push_back(current);
    }
  }
  result.final_state = std::move(current);
  return result;
}

InequalityReport check_energy_inequality(std::span<const EnergyRecord> ledger, double epsilon,
                                         double tol) {
  if (ledger.empty()) throw PreconditionError("check_energy_inequality: empty ledger");
  InequalityReport rep;
  const double h0 = ledger.front().hamiltonian;
  for (const auto& r : ledger) {
    const double excess = epsilon > 0.0 ? r.hamiltonian - h0 : std::abs(r.hamiltonian - h0);
    rep.max_violation = std::max(rep.max_violation, excess);
  }
  rep.pass = rep.max_violation <= tol;
  return rep;
}

InequalityReport check_nonincreasing(std::span<const EnergyRecord> ledger, double tol_per_record) {
  InequalityReport rep;
  for (size_t k = 1; k < ledger.size(); ++k) {
    rep.max_violation =
        std::max(rep.max_violation, ledger[k].hamiltonian - ledger[k - 1].hamiltonian);
  }
  rep.pass = rep.max_violation <= tol_per_record;
  return rep;
}

SweepResult epsilon_sweep(const MapState& initial, const SolverConfig& config,
                          std::span<const double> eps_list, int threads) {
  if (eps_list.empty()) throw ValidationError("sweep: empty epsilon list");
  for (size_t k = 0; k < eps_list.size(); ++k) {
    if (!(eps_list[k] >= 0.0)) throw ValidationError("sweep: epsilon values must be >= 0");
    if (k > 0 && !(eps_list[k] < eps_list[k - 1])) {
      throw ValidationError("sweep: epsilon list must be strictly descending");
    }
  }
  if (eps_list.back() != 0.0) throw ValidationError("sweep: epsilon list must end with 0");
  for (double eps : eps_list) {
    SolverConfig c = config;
    c.epsilon = eps;
    c.validate(initial.grid);
  }

  SolverConfig ref_config = config;
  ref_config.epsilon = 0.0;
  std::vector<GridField> reference;
  EvolveOptions ref_opts;
  ref_opts.on_record = [&](const MapState& s) { reference.push_back(s.u); };
  const EvolveResult ref = evolve(initial, ref_config, ref_opts);

  SweepResult out;
  out.rows.resize(eps_list.size());
  auto run_member = [&](size_t k) {
    SweepRow& row = out.rows[k];
    row.epsilon = eps_list[k];
    if (eps_list[k] == 0.0) {
      row.aborted = ref.aborted;
      return;
    }
    SolverConfig c = config;
    c.epsilon = eps_list[k];
    size_t idx = 0;
    EvolveOptions opts;
    opts.on_record = [&](const MapState& s) {
      if (idx >= reference.size()) return;
      GridField diff = s.u;
      const GridField& r = reference[idx++];
      for (size_t q = 0; q < diff.values().size(); ++q) diff.values()[q] -= r.values()[q];
      row.sup_l2 = std::max(row.sup_l2, grid::l2_norm(diff));
      row.sup_linf = std::max(row.sup_linf, grid::linf_norm(diff));
    };
    const EvolveResult res = evolve(initial, c, opts);
    row.aborted = res.aborted || ref.aborted;
  };

  const size_t jobs = eps_list.size();
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(jobs)));
  if (workers == 1) {
    for (size_t k = 0; k < jobs; ++k) run_member(k);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (size_t k = next++; k < jobs; k = next++) run_member(k);
      });
    }
  }

  const SweepRow* prev = nullptr;
  for (const auto& row : out.rows) {
    if (row.aborted || row.epsilon == 0.0) continue;
    if (prev != nullptr) {
      if (row.sup_l2 >= prev->sup_l2) out.monotone = false;
      out.ratios.push_back(row.sup_l2 > 0.0 ? prev->sup_l2 / row.sup_l2 : 0.0);
    }
    prev = &row;
  }
  return out;
}

void write_ledger_csv(std::ostream& os, std::span<const EnergyRecord> ledger) {
  os << "t,kinetic,dirichlet,potential_integral,hamiltonian,constraint_drift,tangency_drift,"
        "h1_seminorm\n";
  for (const auto& r : ledger) {
    os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.t,
                      r.kinetic, r.dirichlet, r.potential_integral, r.hamiltonian,
                      r.constraint_drift, r.tangency_drift, r.h1_seminorm);
  }
}

void write_ledger_csv(const std::string& path, std::span<const EnergyRecord> ledger) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_ledger_csv(os, ledger);
}

}  // namespace solitonsim::evolver

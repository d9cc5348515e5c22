#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <thread>

#include "solitonsim/cli.hpp"
#include "solitonsim/error.hpp"
#include "solitonsim/geometry.hpp"
#include "solitonsim/initial_data.hpp"
#include "solitonsim/soliton.hpp"

namespace solitonsim::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

// Collects pass/fail checks and headline numbers for summary.json.
struct Summary {
  json checks = json::object();
  json results = json::object();
  std::vector<std::string> warnings;
  double max_constraint_drift = 0.0;
  double max_tangency_drift = 0.0;
  bool aborted = false;
  std::string abort_reason;

  void check(const std::string& name, bool pass, double value, double tol) {
    checks[name] = {{"pass", pass}, {"value", value}, {"tolerance", tol}};
  }
  void check_range(const std::string& name, double value, double lo, double hi) {
    const bool pass = std::isfinite(value) && value >= lo && value <= hi;
    checks[name] = {{"pass", pass}, {"value", value}, {"range", {lo, hi}}};
  }
  void drift(const evolver::EvolveResult& r) {
    max_constraint_drift = std::max(max_constraint_drift, r.max_constraint_drift);
    max_tangency_drift = std::max(max_tangency_drift, r.max_tangency_drift);
    if (r.aborted) {
      aborted = true;
      if (abort_reason.empty()) abort_reason = r.abort_reason;
    }
  }
  void drift(const grid::GridField& u) {
    max_constraint_drift = std::max(max_constraint_drift, evolver::constraint_drift(u));
  }

  json to_json(Command c) const {
    bool all = true;
    for (const auto& [name, chk] : checks.items()) all = all && chk.at("pass").get<bool>();
    return {{"command", to_string(c)},
            {"status", aborted ? "aborted" : "ok"},
            {"abort_reason", abort_reason},
            {"all_pass", all && !aborted},
            {"max_constraint_drift", max_constraint_drift},
            {"max_tangency_drift", max_tangency_drift},
            {"checks", checks},
            {"results", results},
            {"warnings", warnings}};
  }
};

evolver::SolverConfig solver_for(const RunConfig& c, const grid::Grid1D& g) {
  evolver::SolverConfig s = c.solver;
  if (c.dt_over_h > 0.0) s.dt = c.dt_over_h * g.spacing();
  return s;
}

// Velocity columns appended so the file reloads as (u₀, u₁).
grid::GridField state_field(const evolver::MapState& s) {
  grid::GridField f(s.grid, 6);
  for (int i = 0; i < s.grid.n; ++i) {
    for (int c = 0; c < 3; ++c) {
      f(i, c) = s.u(i, c);
      f(i, c + 3) = s.v(i, c);
    }
  }
  return f;
}

// k of the latitude underneath a (possibly perturbed) spec, if any.
std::optional<int> latitude_k(const InitialDataSpec& s) {
  if (s.kind == "latitude") return s.k;
  if (s.kind == "perturbed" && s.base) return latitude_k(*s.base);
  return std::nullopt;
}

bool refinable(const InitialDataSpec& s) {
  if (s.kind == "file") return false;
  if (s.kind == "perturbed") return s.base && refinable(*s.base);
  return true;
}

template <typename F>
void parallel_for(size_t jobs, int threads, F&& body) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(jobs)));
  if (workers == 1) {
    for (size_t k = 0; k < jobs; ++k) body(k);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::exception_ptr> failures(jobs);
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (size_t k = next++; k < jobs; k = next++) {
          try {
            body(k);
          } catch (...) {
            failures[k] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

void energy_checks(const evolver::SolverConfig& s,
                   const std::vector<evolver::EnergyRecord>& ledger, Summary& sum) {
  const double h0 = ledger.front().hamiltonian;
  double drift = 0.0;
  double h1_max = 0.0;
  for (const auto& r : ledger) {
    drift = std::max(drift, std::abs(r.hamiltonian - h0));
    h1_max = std::max(h1_max, r.h1_seminorm);
  }
  const double rel = drift / std::max(1.0, std::abs(h0));
  sum.results["hamiltonian_initial"] = h0;
  sum.results["hamiltonian_final"] = ledger.back().hamiltonian;
  sum.results["hamiltonian_relative_drift"] = rel;
  sum.results["h1_initial"] = ledger.front().h1_seminorm;
  sum.results["h1_max"] = h1_max;
  if (s.epsilon == 0.0) {
    sum.check("hamiltonian_conservation", rel <= 1e-4, rel, 1e-4);
  } else {
    const double tol = 10.0 * s.dt * s.dt * s.record_every;
    const auto rep = evolver::check_nonincreasing(ledger, tol);
    sum.check("energy_inequality", rep.pass, rep.max_violation, tol);
  }
}

int cmd_evolve(const RunConfig& c, const fs::path& out, Summary& sum) {
  const grid::Grid1D g = *c.grid1;
  const auto s = solver_for(c, g);
  const evolver::MapState init = load_initial(c.initial, g, &sum.warnings);
  evolver::EvolveOptions opts;
  opts.snapshot_every = c.snapshot_every;
  const auto r = evolver::evolve(init, s, opts);
  sum.drift(r);

  evolver::write_ledger_csv((out / "ledger.csv").string(), r.ledger);
  for (size_t k = 0; k < r.snapshots.size(); ++k) {
    grid::write_csv((out / fmt::format("snap_{:06}.csv", k)).string(), state_field(r.snapshots[k]));
  }
  grid::write_csv((out / "final.csv").string(), state_field(r.final_state));

  sum.check("constraint", r.max_constraint_drift <= s.constraint_tol, r.max_constraint_drift,
            s.constraint_tol);
  sum.check("tangency", r.max_tangency_drift <= s.tangency_tol, r.max_tangency_drift,
            s.tangency_tol);
  energy_checks(s, r.ledger, sum);
  sum.results["steps"] = r.steps;
  sum.results["t_final"] = r.final_state.t;
  return r.aborted ? kExitAbort : kExitOk;
}

int cmd_soliton_profile(const RunConfig& c, const fs::path& out, Summary& sum) {
  const grid::Grid1D g = *c.grid1;
  const grid::GridField u0 = load_initial(c.initial, g, &sum.warnings).u;
  const auto r = elliptic::solve_elliptic(u0, c.elliptic);
  elliptic::write_history_csv((out / "history.csv").string(), r.history);
  grid::write_csv((out / "profile.csv").string(), r.u);
  sum.drift(r.u);

  const double res = elliptic::elliptic_residual(r.u).linf;
  sum.check("converged", r.converged, res, c.elliptic.residual_target);
  double u3_min = 1.0;
  double u3_max = -1.0;
  double u3_sum = 0.0;
  for (int i = 0; i < g.n; ++i) {
    u3_min = std::min(u3_min, r.u(i, 2));
    u3_max = std::max(u3_max, r.u(i, 2));
    u3_sum += r.u(i, 2);
  }
  sum.results["iterations"] = r.iterations;
  sum.results["F"] = elliptic::functional_F(r.u);
  sum.results["residual_linf"] = res;
  sum.results["u3_min"] = u3_min;
  sum.results["u3_max"] = u3_max;
  sum.results["u3_mean"] = u3_sum / g.n;
  if (const auto k = latitude_k(c.initial); k && *k != 0) {
    const double target = -1.0 / (*k * *k);
    const double dev = std::max(std::abs(u3_min - target), std::abs(u3_max - target));
    sum.results["latitude_u3_deviation"] = dev;
    sum.check("latitude_relation", dev <= 1e-6, dev, 1e-6);
  }
  return kExitOk;
}

int cmd_verify_reduction(const RunConfig& c, const fs::path& out, Summary& sum) {
  const grid::Grid1D g = *c.grid1;
  const grid::GridField u = load_initial(c.initial, g, &sum.warnings).u;
  sum.drift(u);
  soliton::ResidualReport rep = soliton::schrodinger_residual(u);
  json report;
  if (refinable(c.initial)) {
    const grid::Grid1D fine{2 * g.n, g.length};
    const auto fine_rep = soliton::schrodinger_residual(load_initial(c.initial, fine).u);
    rep.order = soliton::refinement_order(rep, fine_rep);
    report["fine"] = fine_rep.to_json();
    sum.check_range("refinement_order", *rep.order, 1.7, 2.3);
  }
  report["residual"] = rep.to_json();

  const double ell = grid::l2_norm(elliptic::elliptic_residual(u).field);
  const double agree = std::abs(ell - rep.l2);
  sum.check("elliptic_schrodinger_agreement", agree <= 1e-12, agree, 1e-12);
  const std::vector<double> times{0.0, kTwoPi};
  const auto frames = soliton::build_soliton_frames(u, times);
  double period = 0.0;
  for (int i = 0; i < g.n; ++i) {
    period = std::max(period, (frames[1].vec3(i) - frames[0].vec3(i)).norm());
  }
  sum.check("frame_periodicity", period <= 1e-12, period, 1e-12);
  report["frame_periodicity_defect"] = period;
  write_json(out / "report.json", report);
  sum.results["schrodinger_l2"] = rep.l2;
  sum.results["schrodinger_linf"] = rep.linf;
  sum.results["order"] = rep.order ? json(*rep.order) : json(nullptr);
  return kExitOk;
}

void phi_checks(const soliton::PhiResult& phi, Summary& sum, json& report) {
  report["phi"] = {{"compatibility", phi.compatibility},
                   {"degree", phi.degree},
                   {"compatible", phi.compatible},
                   {"mean", phi.mean},
                   {"poisson_relative_residual", phi.poisson_relative_residual}};
  if (!phi.warning.empty()) sum.warnings.push_back(phi.warning);
  sum.check("poisson_residual", phi.poisson_relative_residual <= 1e-10,
            phi.poisson_relative_residual, 1e-10);
  const double off = std::abs(phi.degree - std::round(phi.degree));
  sum.check("integer_degree", off <= 0.05, off, 0.05);
}

int cmd_ishimori(const RunConfig& c, const fs::path& out, Summary& sum) {
  json report;
  const auto& src = c.ishimori.source;
  if (src == "wave") {
    auto sheet_on = [&](const grid::Grid1D& g) {
      auto s = solver_for(c, g);
      if (c.dt_over_h <= 0.0 && g.n != c.grid1->n) s.dt *= static_cast<double>(c.grid1->n) / g.n;
      s.t_end = std::max(s.t_end, c.ishimori.duration);
      const int rows = static_cast<int>(std::lround(c.ishimori.duration / s.dt)) + 1;
      return soliton::wave_sheet(load_initial(c.initial, g, &sum.warnings), s, rows);
    };
    const grid::Grid1D g = *c.grid1;
    const auto sheet = sheet_on(g);
    sum.drift(sheet);
    auto rep = soliton::ishimori_residual(sheet, soliton::SheetBoundary::open_x);
    if (refinable(c.initial)) {
      const auto fine = soliton::ishimori_residual(sheet_on({2 * g.n, g.length}),
                                                   soliton::SheetBoundary::open_x);
      rep.order = soliton::refinement_order(rep, fine);
      report["fine"] = fine.to_json();
      sum.check_range("refinement_order", *rep.order, 1.7, 2.3);
    }
    report["residual"] = rep.to_json();
    sum.results["residual_l2"] = rep.l2;
    sum.results["order"] = rep.order ? json(*rep.order) : json(nullptr);
  } else {
    const grid::Grid2D g2 = *c.grid2;
    grid::GridField sheet(g2, 3);
    if (src == "extrude") {
      const grid::Grid1D gx{g2.nx, g2.lx};
      sheet = initial_data::extrude_y(load_initial(c.initial, gx, &sum.warnings).u, g2);
    } else {
      sheet = initial_data::degree_one_sheet(g2, c.ishimori.radius);
    }
    sum.drift(sheet);
    const auto rep = soliton::ishimori_residual(sheet, soliton::SheetBoundary::periodic);
    report["residual"] = rep.to_json();
    sum.results["residual_l2"] = rep.l2;
    const auto phi = soliton::ishimori_phi(sheet);
    phi_checks(phi, sum, report);
    if (src == "extrude") {
      const double rhs_max = grid::linf_norm(phi.rhs);
      sum.check("rhs_identically_zero", rhs_max == 0.0, rhs_max, 0.0);
    }
    grid::write_csv((out / "phi.csv").string(), phi.phi);
  }
  write_json(out / "report.json", report);
  return kExitOk;
}

int cmd_sweep(const RunConfig& c, const fs::path& out, Summary& sum) {
  const grid::Grid1D g = *c.grid1;
  const auto s = solver_for(c, g);
  const evolver::MapState init = load_initial(c.initial, g, &sum.warnings);
  const auto r = evolver::epsilon_sweep(init, s, c.eps, thread_cap());

  std::ofstream os(out / "sweep.csv");
  if (!os) throw Error("cannot open sweep.csv for writing");
  os << "epsilon,sup_l2,sup_linf,aborted,ratio\n";
  const evolver::SweepRow* prev = nullptr;
  bool aborted = false;
  for (const auto& row : r.rows) {
    double ratio = 0.0;
    if (prev != nullptr && row.epsilon > 0.0 && row.sup_l2 > 0.0) ratio = prev->sup_l2 / row.sup_l2;
    os << fmt::format("{:.17g},{:.17g},{:.17g},{},{:.17g}\n", row.epsilon, row.sup_l2, row.sup_linf,
                      row.aborted ? 1 : 0, ratio);
    if (row.epsilon > 0.0) prev = &row;
    aborted = aborted || row.aborted;
  }
  sum.checks["monotone"] = {{"pass", r.monotone}};
  for (size_t k = 0; k < r.ratios.size(); ++k) {
    sum.check_range(fmt::format("ratio_{}", k), r.ratios[k], 1.5, 2.5);
  }
  if (aborted) {
    sum.aborted = true;
    sum.abort_reason = "a sweep member aborted";
  }
  return aborted ? kExitAbort : kExitOk;
}

int cmd_refine(const RunConfig& c, const fs::path& out, Summary& sum) {
  const double length = c.grid1 ? c.grid1->length : kTwoPi;
  struct Row {
    int n = 0;
    double error = 0.0;
    std::optional<evolver::EvolveResult> result;
  };
  std::vector<Row> rows(c.refine_n.size());
  std::vector<std::vector<std::string>> warnings(rows.size());
  for (size_t k = 0; k < rows.size(); ++k) fs::create_directories(out / fmt::format("n_{}", c.refine_n[k]));

  parallel_for(rows.size(), thread_cap(), [&](size_t k) {
    const grid::Grid1D g{c.refine_n[k], length};
    const evolver::MapState init = load_initial(c.initial, g, &warnings[k]);
    Row& row = rows[k];
    row.n = g.n;
    evolver::EvolveOptions opts;
    opts.on_record = [&](const evolver::MapState& s) {
      for (int i = 0; i < g.n; ++i) {
        row.error = std::max(row.error, (s.u.vec3(i) - init.u.vec3(i)).norm());
      }
    };
    row.result.emplace(evolver::evolve(init, solver_for(c, g), opts));
    evolver::write_ledger_csv((out / fmt::format("n_{}", g.n) / "ledger.csv").string(),
                              row.result->ledger);
  });

  std::ofstream os(out / "refine.csv");
  if (!os) throw Error("cannot open refine.csv for writing");
  os << "n,h,error,order\n";
  double last_order = std::nan("");
  for (size_t k = 0; k < rows.size(); ++k) {
    for (auto& w : warnings[k]) sum.warnings.push_back(std::move(w));
    sum.drift(*rows[k].result);
    double order = std::nan("");
    if (k > 0 && rows[k].error > 0.0) {
      order = std::log(rows[k - 1].error / rows[k].error) /
              std::log(static_cast<double>(rows[k].n) / rows[k - 1].n);
      last_order = order;
    }
    os << fmt::format("{},{:.17g},{:.17g},{:.17g}\n", rows[k].n, length / rows[k].n, rows[k].error,
                      order);
  }
  sum.results["finest_pair_order"] = last_order;
  sum.check_range("refinement_order", last_order, 1.7, 2.3);
  sum.check("constraint", sum.max_constraint_drift <= c.solver.constraint_tol,
            sum.max_constraint_drift, c.solver.constraint_tol);
  return sum.aborted ? kExitAbort : kExitOk;
}

std::vector<AmbientVector> sphere_samples(int count, std::uint64_t seed) {
  const initial_data::CounterRng rng(seed);
  std::vector<AmbientVector> pts;
  for (int k = 0; k < count; ++k) {
    const double z = rng.uniform_pm1(2 * k);
    const double phi = std::numbers::pi * rng.uniform_pm1(2 * k + 1);
    const double r = std::sqrt(1.0 - z * z);
    pts.push_back(Vec3(r * std::cos(phi), r * std::sin(phi), z));
  }
  return pts;
}

int cmd_check_geometry(const RunConfig& c, const fs::path& out, Summary& sum) {
  const auto& opt = c.geometry;
  json report;
  if (opt.target == "sphere") {
    const geometry::Sphere s;
    const auto pts = sphere_samples(opt.samples, opt.seed);
    double herm = 0.0;
    double control = 0.0;
    double killing = 0.0;
    std::vector<std::pair<Vec3, Vec3>> pairs;
    for (const auto& p : pts) {
      herm = std::max(herm, geometry::hermitian_hessian_residual(
                                s, [&](const AmbientVector& q) { return s.potential(q); }, p,
                                opt.fd_step));
      control = std::max(control, geometry::hermitian_hessian_residual(
                                      s, [](const AmbientVector& q) { return q(0) * q(2); }, p,
                                      opt.fd_step));
      killing = std::max(killing, geometry::killing_symmetry_residual(s, p, opt.fd_step));
      const auto frame = s.tangent_frame(p);
      pairs.emplace_back(Vec3(p), Vec3(frame[0] + 0.5 * frame[1]));
    }
    double holo = 0.0;
    for (double alpha : {0.3, 1.0, std::numbers::pi}) {
      holo = std::max(holo, soliton::holomorphic_isometry_check(alpha, pairs));
    }
    sum.check("killing_potential_hessian", herm <= 1e-6, herm, 1e-6);
    sum.check("non_killing_control_detected", control > 1e-2, control, 1e-2);
    sum.check("killing_symmetry", killing <= 1e-6, killing, 1e-6);
    sum.check("holomorphic_isometry", holo <= 1e-12, holo, 1e-12);
    report = {{"hermitian_hessian_max", herm},
              {"control_hermitian_hessian_max", control},
              {"killing_symmetry_max", killing},
              {"intertwining_defect_max", holo}};
  } else {
    const geometry::FlatTorus t;
    const initial_data::CounterRng rng(opt.seed);
    double herm = 0.0;
    double killing = 0.0;
    for (int k = 0; k < opt.samples; ++k) {
      const auto p = geometry::FlatTorus::point(std::numbers::pi * rng.uniform_pm1(2 * k),
                                                std::numbers::pi * rng.uniform_pm1(2 * k + 1));
      herm = std::max(herm, geometry::hermitian_hessian_residual(
                                t, [&](const AmbientVector& q) { return t.potential(q); }, p,
                                opt.fd_step));
      killing = std::max(killing, geometry::killing_symmetry_residual(t, p, opt.fd_step));
    }
    // Λ = cos a is deliberately not a Killing potential on the flat torus.
    sum.check("non_killing_potential_detected", herm > 1e-2, herm, 1e-2);
    sum.check("non_killing_field_detected", killing > 1e-2, killing, 1e-2);
    report = {{"hermitian_hessian_max", herm}, {"killing_symmetry_max", killing}};
  }
  write_json(out / "report.json", report);
  return kExitOk;
}

}  // namespace

int run(const RunConfig& config) {
  const fs::path out(config.output_dir);
  fs::create_directories(out);
  write_json(out / "config_echo.json", to_json(config));

  Summary sum;
  int code = kExitOk;
  try {
    switch (config.command) {
      case Command::evolve: code = cmd_evolve(config, out, sum); break;
      case Command::soliton_profile: code = cmd_soliton_profile(config, out, sum); break;
      case Command::verify_reduction: code = cmd_verify_reduction(config, out, sum); break;
      case Command::ishimori: code = cmd_ishimori(config, out, sum); break;
      case Command::sweep_eps: code = cmd_sweep(config, out, sum); break;
      case Command::refine: code = cmd_refine(config, out, sum); break;
      case Command::check_geometry: code = cmd_check_geometry(config, out, sum); break;
    }
  } catch (const InstabilityError& e) {
    sum.aborted = true;
    sum.abort_reason = e.what();
    code = kExitAbort;
  }
  write_json(out / "summary.json", sum.to_json(config.command));
  return code;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"solitonsim: wave maps with potential, elliptic solitons and their verification"};
  app.allow_extras();
  std::string command;
  std::string config_path;
  app.add_option("command", command, "evolve | soliton-profile | verify-reduction | ishimori | "
                                     "sweep-eps | refine | check-geometry")
      ->required();
  app.add_option("--config", config_path, "JSON configuration file")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    json doc;
    {
      std::ifstream is(config_path);
      if (!is) throw ValidationError("cannot read config file " + config_path);
      try {
        doc = json::parse(is);
      } catch (const json::parse_error& e) {
        throw ValidationError(fmt::format("{}: {}", config_path, e.what()));
      }
    }
    for (const auto& extra : app.remaining()) {
      if (extra.rfind("--", 0) != 0 || extra.find('=') == std::string::npos) {
        throw ValidationError("unexpected argument '" + extra + "' (overrides are --key=value)");
      }
      const size_t eq = extra.find('=');
      apply_override(doc, extra.substr(2, eq - 2), extra.substr(eq + 1));
    }
    if (doc.is_object() && doc.contains("command") && doc["command"] != command) {
      throw ValidationError(fmt::format("command '{}' disagrees with config command {}", command,
                                        doc["command"].dump()));
    }
    doc["command"] = command;
    const RunConfig config = parse_config(doc);
    return run(config);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitAbort;
  }
}

}  // namespace solitonsim::cli

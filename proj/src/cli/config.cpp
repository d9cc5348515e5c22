#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <set>
#include <thread>

#include "solitonsim/cli.hpp"
#include "solitonsim/error.hpp"
#include "solitonsim/initial_data.hpp"

namespace solitonsim::cli {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const std::vector<std::pair<Command, const char*>> kCommands = {
    {Command::evolve, "evolve"},
    {Command::soliton_profile, "soliton-profile"},
    {Command::verify_reduction, "verify-reduction"},
    {Command::ishimori, "ishimori"},
    {Command::sweep_eps, "sweep-eps"},
    {Command::refine, "refine"},
    {Command::check_geometry, "check-geometry"},
};

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown. Errors accumulate in a shared list.
class Section {
 public:
  Section(const json& obj, std::string path, std::vector<std::string>& errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {
    if (!obj_.is_object()) errors_.push_back(fmt::format("{}: expected an object", label()));
  }

  bool has(const std::string& key) const { return obj_.is_object() && obj_.contains(key); }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    seen_.insert(key);
    const json& v = obj_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::runtime_error("number expected");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer() && !v.is_number_unsigned()) {
          throw std::runtime_error("integer expected");
        }
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && v.get<long long>() < 0) {
            throw std::runtime_error("non-negative integer expected");
          }
        }
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::runtime_error("boolean expected");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::runtime_error("string expected");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      errors_.push_back(fmt::format("{}: {}", label(key), e.what()));
    }
  }

  const json* child(const std::string& key) {
    if (!has(key)) return nullptr;
    seen_.insert(key);
    return &obj_.at(key);
  }

  void finish() {
    if (!obj_.is_object()) return;
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.contains(it.key())) {
        errors_.push_back(fmt::format("unknown key '{}'", label(it.key())));
      }
    }
  }

  std::string label(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  std::vector<std::string>& errors() { return errors_; }

 private:
  const json& obj_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

void check(bool ok, std::vector<std::string>& errors, const std::string& msg) {
  if (!ok) errors.push_back(msg);
}

template <typename F>
void capture(std::vector<std::string>& errors, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    errors.emplace_back(e.what());
  }
}

InitialDataSpec parse_initial(const json& obj, const std::string& path,
                              std::vector<std::string>& errors) {
  InitialDataSpec s;
  Section sec(obj, path, errors);
  sec.read("kind", s.kind);
  sec.read("omega", s.omega);
  if (s.kind == "pole") {
    sec.read("north", s.north);
  } else if (s.kind == "latitude") {
    check(sec.has("k") && sec.has("costheta"), errors,
          fmt::format("{}: latitude needs k and costheta", sec.label()));
    sec.read("k", s.k);
    sec.read("costheta", s.costheta);
    check(std::abs(s.costheta) <= 1.0, errors,
          fmt::format("{}: |costheta| must be <= 1", sec.label("costheta")));
  } else if (s.kind == "file") {
    check(sec.has("path"), errors, fmt::format("{}: file needs path", sec.label()));
    sec.read("path", s.path);
  } else if (s.kind == "perturbed") {
    check(sec.has("base"), errors, fmt::format("{}: perturbed needs base", sec.label()));
    if (const json* b = sec.child("base")) {
      s.base = std::make_shared<InitialDataSpec>(parse_initial(*b, sec.label("base"), errors));
    }
    sec.read("amplitude", s.amplitude);
    sec.read("seed", s.seed);
    check(s.amplitude >= 0.0 && std::isfinite(s.amplitude), errors,
          fmt::format("{}: must be finite and >= 0", sec.label("amplitude")));
  } else {
    errors.push_back(fmt::format("{}: unrecognized kind '{}' (pole, latitude, file, perturbed)",
                                 sec.label("kind"), s.kind));
  }
  sec.finish();
  return s;
}

json initial_to_json(const InitialDataSpec& s) {
  json j{{"kind", s.kind}};
  if (s.omega != 0.0) j["omega"] = s.omega;
  if (s.kind == "pole") {
    j["north"] = s.north;
  } else if (s.kind == "latitude") {
    j["k"] = s.k;
    j["costheta"] = s.costheta;
  } else if (s.kind == "file") {
    j["path"] = s.path;
  } else if (s.kind == "perturbed") {
    j["base"] = s.base ? initial_to_json(*s.base) : json::object();
    j["amplitude"] = s.amplitude;
    j["seed"] = s.seed;
  }
  return j;
}

bool needs_grid1(const RunConfig& c) {
  switch (c.command) {
    case Command::evolve:
    case Command::soliton_profile:
    case Command::verify_reduction:
    case Command::sweep_eps:
      return true;
    case Command::ishimori:
      return c.ishimori.source == "wave";
    default:
      return false;
  }
}

bool uses_solver(const RunConfig& c) {
  switch (c.command) {
    case Command::evolve:
    case Command::sweep_eps:
    case Command::refine:
      return true;
    case Command::ishimori:
      return c.ishimori.source == "wave";
    default:
      return false;
  }
}

void validate_solver_on(const RunConfig& c, const grid::Grid1D& g, std::vector<std::string>& errors) {
  evolver::SolverConfig s = c.solver;
  if (c.dt_over_h > 0.0) s.dt = c.dt_over_h * g.spacing();
  if (c.command == Command::ishimori) s.t_end = std::max(s.t_end, c.ishimori.duration);
  capture(errors, [&] { s.validate(g); });
}

}  // namespace

std::string to_string(Command c) {
  for (const auto& [cmd, name] : kCommands) {
    if (cmd == c) return name;
  }
  return "?";
}

Command command_from_string(const std::string& s) {
  for (const auto& [cmd, name] : kCommands) {
    if (s == name) return cmd;
  }
  throw ValidationError(fmt::format(
      "unknown command '{}' (evolve, soliton-profile, verify-reduction, ishimori, sweep-eps, "
      "refine, check-geometry)",
      s));
}

RunConfig parse_config(const json& doc) {
  std::vector<std::string> errors;
  RunConfig c;
  Section root(doc, "", errors);
  if (!doc.is_object()) throw ValidationError("config: top level must be a JSON object");

  std::string command;
  if (!root.has("command")) errors.emplace_back("command: missing");
  root.read("command", command);
  if (!command.empty()) capture(errors, [&] { c.command = command_from_string(command); });

  root.read("output_dir", c.output_dir);
  root.read("snapshot_every", c.snapshot_every);
  check(c.snapshot_every >= 0, errors, "snapshot_every: must be >= 0");

  if (const json* g = root.child("grid")) {
    Section sec(*g, "grid", errors);
    if (sec.has("nx") || sec.has("ny")) {
      grid::Grid2D g2;
      sec.read("nx", g2.nx);
      sec.read("ny", g2.ny);
      sec.read("Lx", g2.lx);
      sec.read("Ly", g2.ly);
      capture(errors, [&] { g2.validate(); });
      c.grid2 = g2;
    } else {
      grid::Grid1D g1;
      sec.read("n", g1.n);
      sec.read("length", g1.length);
      // refine takes its node counts from refine.n; the grid only fixes L.
      if (sec.has("n") || command != "refine") capture(errors, [&] { g1.validate(); });
      c.grid1 = g1;
    }
    sec.finish();
  }

  if (const json* s = root.child("solver")) {
    Section sec(*s, "solver", errors);
    auto& sv = c.solver;
    sec.read("epsilon", sv.epsilon);
    sec.read("dt", sv.dt);
    sec.read("dt_over_h", c.dt_over_h);
    sec.read("t_end", sv.t_end);
    std::string scheme = evolver::to_string(sv.scheme);
    sec.read("scheme", scheme);
    capture(errors, [&] { sv.scheme = evolver::scheme_from_string(scheme); });
    sec.read("renormalize_every", sv.renormalize_every);
    sec.read("record_every", sv.record_every);
    sec.read("constraint_tol", sv.constraint_tol);
    sec.read("tangency_tol", sv.tangency_tol);
    sec.read("cfl_factor", sv.cfl_factor);
    sec.read("instability_drift", sv.instability_drift);
    check(!(sv.dt > 0.0 && c.dt_over_h > 0.0), errors,
          "solver: give either dt or dt_over_h, not both");
    sec.finish();
  }

  if (const json* e = root.child("elliptic")) {
    Section sec(*e, "elliptic", errors);
    auto& ec = c.elliptic;
    sec.read("flow_dt", ec.flow_dt);
    sec.read("max_iters", ec.max_iters);
    sec.read("residual_target", ec.residual_target);
    std::string mode = elliptic::to_string(ec.mode);
    sec.read("mode", mode);
    capture(errors, [&] { ec.mode = elliptic::mode_from_string(mode); });
    sec.finish();
  }

  if (const json* i = root.child("initial_data")) c.initial = parse_initial(*i, "initial_data", errors);

  if (const json* e = root.child("eps")) {
    if (e->is_string()) {
      // "0.1,0.05,0.025,0" as typed on a command line.
      std::string rest = e->get<std::string>();
      while (!rest.empty()) {
        const size_t comma = rest.find(',');
        const std::string item = rest.substr(0, comma);
        try {
          size_t used = 0;
          c.eps.push_back(std::stod(item, &used));
          if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
          errors.push_back(fmt::format("eps: '{}' is not a number", item));
        }
        rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
      }
    } else if (!e->is_array() ||
               !std::all_of(e->begin(), e->end(), [](const json& x) { return x.is_number(); })) {
      errors.emplace_back("eps: expected an array of numbers or a comma-separated string");
    } else {
      c.eps = e->get<std::vector<double>>();
    }
  }

  if (const json* r = root.child("refine")) {
    Section sec(*r, "refine", errors);
    if (const json* n = sec.child("n")) {
      if (!n->is_array() ||
          !std::all_of(n->begin(), n->end(), [](const json& x) { return x.is_number_integer(); })) {
        errors.emplace_back("refine.n: expected an array of integers");
      } else {
        c.refine_n = n->get<std::vector<int>>();
      }
    }
    sec.finish();
  }

  if (const json* s = root.child("ishimori")) {
    Section sec(*s, "ishimori", errors);
    sec.read("source", c.ishimori.source);
    sec.read("duration", c.ishimori.duration);
    sec.read("radius", c.ishimori.radius);
    check(c.ishimori.source == "wave" || c.ishimori.source == "extrude" ||
              c.ishimori.source == "degree_one",
          errors, "ishimori.source: expected wave, extrude or degree_one");
    check(c.ishimori.duration > 0.0, errors, "ishimori.duration: must be > 0");
    check(c.ishimori.radius > 0.0, errors, "ishimori.radius: must be > 0");
    sec.finish();
  }

  if (const json* g = root.child("geometry")) {
    Section sec(*g, "geometry", errors);
    sec.read("target", c.geometry.target);
    sec.read("samples", c.geometry.samples);
    sec.read("seed", c.geometry.seed);
    sec.read("fd_step", c.geometry.fd_step);
    check(c.geometry.target == "sphere" || c.geometry.target == "flat_torus", errors,
          "geometry.target: expected sphere or flat_torus");
    check(c.geometry.samples >= 1, errors, "geometry.samples: must be >= 1");
    check(c.geometry.fd_step > 0.0 && c.geometry.fd_step <= 1e-2, errors,
          "geometry.fd_step: must lie in (0, 1e-2]");
    sec.finish();
  }
  root.finish();

  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ValidationError(msg);
  }

  // Command-level requirements, checked once the document itself is sound.
  if (needs_grid1(c) && !c.grid1) errors.emplace_back("grid: this command needs {n, length}");
  if (c.command == Command::ishimori && c.ishimori.source != "wave" && !c.grid2) {
    errors.emplace_back("grid: ishimori with a 2D source needs {nx, ny, Lx, Ly}");
  }
  if (c.command == Command::refine) {
    if (c.refine_n.size() < 2) errors.emplace_back("refine.n: need at least two grid sizes");
    for (size_t k = 0; k < c.refine_n.size(); ++k) {
      if (c.refine_n[k] < 8) errors.push_back(fmt::format("refine.n[{}]: must be >= 8", k));
      if (k > 0 && c.refine_n[k] <= c.refine_n[k - 1]) {
        errors.emplace_back("refine.n: must be strictly increasing");
      }
    }
  }
  if (c.command == Command::sweep_eps) {
    if (c.eps.empty()) errors.emplace_back("eps: sweep-eps needs an epsilon list");
    for (size_t k = 0; k < c.eps.size(); ++k) {
      if (!(c.eps[k] >= 0.0)) errors.push_back(fmt::format("eps[{}]: must be >= 0", k));
      if (k > 0 && !(c.eps[k] < c.eps[k - 1])) errors.emplace_back("eps: must be strictly descending");
    }
    if (!c.eps.empty() && c.eps.back() != 0.0) errors.emplace_back("eps: must end with 0");
  }
  if (uses_solver(c)) {
    if (c.command == Command::refine) {
      for (int n : c.refine_n) {
        if (n < 8) continue;
        grid::Grid1D g{n, c.grid1 ? c.grid1->length : kTwoPi};
        validate_solver_on(c, g, errors);
      }
      if (!(c.dt_over_h > 0.0)) errors.emplace_back("solver.dt_over_h: refine needs dt tied to h");
    } else if (c.grid1) {
      validate_solver_on(c, *c.grid1, errors);
      if (c.command == Command::sweep_eps) {
        for (double e : c.eps) {
          RunConfig tmp = c;
          tmp.solver.epsilon = e;
          validate_solver_on(tmp, *c.grid1, errors);
        }
      }
    }
  }
  if (c.command == Command::soliton_profile && c.grid1) {
    capture(errors, [&] { c.elliptic.validate(*c.grid1); });
  }

  if (!errors.empty()) {
    std::sort(errors.begin(), errors.end());
    errors.erase(std::unique(errors.begin(), errors.end()), errors.end());
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ValidationError(msg);
  }
  return c;
}

json to_json(const RunConfig& c) {
  json j;
  j["command"] = to_string(c.command);
  j["output_dir"] = c.output_dir;
  j["snapshot_every"] = c.snapshot_every;
  if (c.grid1) {
    j["grid"] = {{"n", c.grid1->n}, {"length", c.grid1->length}};
    if (c.grid1->n == 0) j["grid"].erase("n");
  }
  if (c.grid2) {
    j["grid"] = {{"nx", c.grid2->nx}, {"ny", c.grid2->ny}, {"Lx", c.grid2->lx}, {"Ly", c.grid2->ly}};
  }
  const auto& s = c.solver;
  j["solver"] = {{"epsilon", s.epsilon},
                 {"dt", s.dt},
                 {"dt_over_h", c.dt_over_h},
                 {"t_end", s.t_end},
                 {"scheme", evolver::to_string(s.scheme)},
                 {"renormalize_every", s.renormalize_every},
                 {"record_every", s.record_every},
                 {"constraint_tol", s.constraint_tol},
                 {"tangency_tol", s.tangency_tol},
                 {"cfl_factor", s.cfl_factor},
                 {"instability_drift", s.instability_drift}};
  if (c.dt_over_h > 0.0) {
    j["solver"].erase("dt");
  } else {
    j["solver"].erase("dt_over_h");
  }
  const auto& e = c.elliptic;
  j["elliptic"] = {{"flow_dt", e.flow_dt},
                   {"max_iters", e.max_iters},
                   {"residual_target", e.residual_target},
                   {"mode", elliptic::to_string(e.mode)}};
  j["initial_data"] = initial_to_json(c.initial);
  if (!c.eps.empty()) j["eps"] = c.eps;
  if (!c.refine_n.empty()) j["refine"] = {{"n", c.refine_n}};
  j["ishimori"] = {{"source", c.ishimori.source},
                   {"duration", c.ishimori.duration},
                   {"radius", c.ishimori.radius}};
  j["geometry"] = {{"target", c.geometry.target},
                   {"samples", c.geometry.samples},
                   {"seed", c.geometry.seed},
                   {"fd_step", c.geometry.fd_step}};
  return j;
}

void apply_override(json& doc, const std::string& dotted_key, const std::string& value) {
  if (dotted_key.empty()) throw ValidationError("override: empty key");
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;
  }
  json* node = &doc;
  size_t start = 0;
  while (true) {
    const size_t dot = dotted_key.find('.', start);
    const std::string part = dotted_key.substr(start, dot - start);
    if (part.empty()) throw ValidationError("override: malformed key '" + dotted_key + "'");
    if (!node->is_object()) {
      throw ValidationError("override: '" + dotted_key + "' descends into a non-object");
    }
    if (dot == std::string::npos) {
      (*node)[part] = parsed;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

evolver::MapState load_initial(const InitialDataSpec& spec, const grid::Grid1D& g,
                               std::vector<std::string>* warnings) {
  namespace id = initial_data;
  g.validate();
  grid::GridField u(g, 3);
  grid::GridField v(g, 3);
  if (spec.kind == "pole") {
    u = id::pole(g, spec.north);
  } else if (spec.kind == "latitude") {
    u = id::latitude(g, spec.k, spec.costheta);
  } else if (spec.kind == "perturbed") {
    if (!spec.base) throw ValidationError("initial_data: perturbed needs a base");
    const evolver::MapState base = load_initial(*spec.base, g, warnings);
    u = id::perturb(base.u, spec.amplitude, spec.seed);
    v = base.v;
  } else if (spec.kind == "file") {
    const grid::GridField f = grid::read_csv(spec.path);
    if (f.shape().dims() != 1 || f.nodes() != g.n) {
      throw ValidationError(fmt::format("initial_data: {} has {} nodes, the grid has {}", spec.path,
                                        f.nodes(), g.n));
    }
    if (f.components() != 3 && f.components() != 6) {
      throw ValidationError(fmt::format("initial_data: {} has {} value columns (expected 3 or 6)",
                                        spec.path, f.components()));
    }
    for (int i = 0; i < g.n; ++i) {
      const Vec3 p(f(i, 0), f(i, 1), f(i, 2));
      if (!(std::abs(p.norm() - 1.0) <= 1e-3)) {
        throw ValidationError(fmt::format(
            "initial_data: {} row {} has |u| = {:.6g}, not a map into S^2", spec.path, i, p.norm()));
      }
      u.set(i, p.normalized());
      if (f.components() == 6) v.set(i, Vec3(f(i, 3), f(i, 4), f(i, 5)));
    }
  } else {
    throw ValidationError("initial_data: unrecognized kind '" + spec.kind + "'");
  }
  if (spec.omega != 0.0) v = id::rotation_velocity(u, spec.omega);
  // Whatever the source, the velocity must be tangent to the perturbed map.
  return evolver::make_state(u, v, 0.0, warnings);
}

int thread_cap() {
  if (const char* env = std::getenv("SOLITONSIM_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<int>(std::min(n, 1024L));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace solitonsim::cli

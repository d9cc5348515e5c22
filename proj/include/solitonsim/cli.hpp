#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "solitonsim/elliptic.hpp"
#include "solitonsim/evolver.hpp"
#include "solitonsim/grid.hpp"

namespace solitonsim::cli {

enum class Command {
  evolve,
  soliton_profile,
  verify_reduction,
  ishimori,
  sweep_eps,
  refine,
  check_geometry,
};

std::string to_string(Command c);
Command command_from_string(const std::string& s);

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitAbort = 3;

/// kind ∈ {pole, latitude, file, perturbed}. `perturbed` wraps a base spec.
/// omega ≠ 0 sets u₁ = ω e₃×u₀ (rigid rotation about z); otherwise u₁ = 0,
/// or the velocity columns of a 6-component file.
struct InitialDataSpec {
  std::string kind = "pole";
  bool north = true;
  int k = 1;
  double costheta = 0.0;
  std::string path;
  std::shared_ptr<InitialDataSpec> base;
  double amplitude = 0.0;
  std::uint64_t seed = 0;
  double omega = 0.0;
};

struct IshimoriOptions {
  /// wave: evolver time history; extrude: y-independent sheet of the initial
  /// profile; degree_one: bubble of degree one.
  std::string source = "wave";
  double duration = 2.0;
  double radius = 1.0;
};

struct GeometryOptions {
  std::string target = "sphere";
  int samples = 20;
  std::uint64_t seed = 1;
  double fd_step = 1e-4;
};

struct RunConfig {
  Command command = Command::evolve;
  std::optional<grid::Grid1D> grid1;
  std::optional<grid::Grid2D> grid2;
  evolver::SolverConfig solver;
  /// When positive, dt = dt_over_h · h on every grid the command uses.
  double dt_over_h = 0.0;
  elliptic::EllipticConfig elliptic;
  InitialDataSpec initial;
  std::string output_dir = ".";
  int snapshot_every = 0;
  std::vector<double> eps;
  std::vector<int> refine_n;
  IshimoriOptions ishimori;
  GeometryOptions geometry;
};

/// Parses and validates a configuration document. Unknown keys, wrong types
/// and out-of-range values throw ValidationError naming every offending key.
RunConfig parse_config(const nlohmann::json& doc);
/// Fully resolved document; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& config);

/// Sets doc[a][b]... = value for the dotted key "a.b". The value is read as
/// JSON when it parses, as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& dotted_key, const std::string& value);

evolver::MapState load_initial(const InitialDataSpec& spec, const grid::Grid1D& g,
                               std::vector<std::string>* warnings = nullptr);

/// Concurrency cap: SOLITONSIM_THREADS if set to a positive integer, else the
/// hardware concurrency.
int thread_cap();

/// Executes the command and writes its artifacts into config.output_dir.
/// Returns kExitOk, or kExitAbort when a run aborted numerically.
int run(const RunConfig& config);

/// `solitonsim <command> --config path.json [--key=value ...]`.
int main_entry(int argc, char** argv);

}  // namespace solitonsim::cli

#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "solitonsim/grid.hpp"

namespace solitonsim::evolver {

using grid::Grid1D;
using grid::GridField;

enum class Scheme { leapfrog, rk4 };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

/// Discretized map u: S¹ → S² with its tangent velocity v = u_t at time t.
struct MapState {
  Grid1D grid;
  GridField u;
  GridField v;
  double t = 0.0;

  MapState(const Grid1D& g) : grid(g), u(g, 3), v(g, 3) {}  // NOLINT
};

struct SolverConfig {
  double epsilon = 0.0;
  double dt = 0.0;
  double t_end = 0.0;
  Scheme scheme = Scheme::leapfrog;
  int renormalize_every = 1;
  int record_every = 1;
  double constraint_tol = 1e-12;
  double tangency_tol = 1e-10;
  double cfl_factor = 0.5;
  /// Abort when ||u|-1| before constraint restoration exceeds this.
  double instability_drift = 1e-3;

  /// CFL guard dt ≤ cfl_factor·h, and dt ≤ h²/(4ε) for the explicit viscous term.
  void validate(const Grid1D& g) const;
};

struct EnergyRecord {
  double t = 0.0;
  double kinetic = 0.0;
  double dirichlet = 0.0;
  double potential_integral = 0.0;
  double hamiltonian = 0.0;
  double constraint_drift = 0.0;
  double tangency_drift = 0.0;
  double h1_seminorm = 0.0;
};

double constraint_drift(const GridField& u);
double tangency_drift(const GridField& u, const GridField& v);

/// Builds a state from initial data (u₀, u₁). u₀ must be unit within 1e-10
/// nodewise (then renormalized exactly); a non-tangent u₁ is projected and a
/// warning is appended.
MapState make_state(const GridField& u0, const GridField& u1, double t = 0.0,
                    std::vector<std::string>* warnings = nullptr);

/// Throws PreconditionError naming the first node that breaks |u|=1 or u·v=0.
void check_invariants(const MapState& s, double constraint_tol = 1e-10,
                      double tangency_tol = 1e-8);

/// u_tt = Δu + λu - ∇Λ(u) + ε P(u)Δv with λ = |diff1 u|² - |v|².
GridField acceleration(const MapState& state, double epsilon);

/// Same formula without invariant checks (used on Runge–Kutta stages).
GridField acceleration_unchecked(const GridField& u, const GridField& v, double epsilon);

struct StepDiagnostics {
  double pre_restoration_drift = 0.0;
  bool restored = true;
};

/// One step of size dt. `step_index` decides whether this step falls on the
/// renormalization cadence.
MapState step(const MapState& state, const SolverConfig& config, double dt,
              long step_index = 0, StepDiagnostics* diag = nullptr);
MapState step(const MapState& state, const SolverConfig& config);

EnergyRecord energy_report(const MapState& state);

struct EvolveResult {
  explicit EvolveResult(MapState s) : final_state(std::move(s)) {}

  std::vector<MapState> snapshots;
  std::vector<EnergyRecord> ledger;
  MapState final_state;
  bool aborted = false;
  double abort_time = 0.0;
  std::string abort_reason;
  long steps = 0;
  double max_constraint_drift = 0.0;
  double max_tangency_drift = 0.0;
  double max_pre_restoration_drift = 0.0;
};

struct EvolveOptions {
  /// Keep a snapshot every this many steps (0 = none).
  int snapshot_every = 0;
  /// Called with the state at every ledger record.
  std::function<void(const MapState&)> on_record;
};

/// Integrates to config.t_end (last step shortened to land on t_end). A
/// non-finite state or an InstabilityError aborts the run; the last valid
/// state is returned in final_state.
EvolveResult evolve(const MapState& initial, const SolverConfig& config,
                    const EvolveOptions& options = {});

struct InequalityReport {
  bool pass = true;
  double max_violation = 0.0;
};

/// ε > 0: H(t) ≤ H(0) + tol for all t. ε = 0: |H(t) - H(0)| ≤ tol.
InequalityReport check_energy_inequality(std::span<const EnergyRecord> ledger, double epsilon,
                                         double tol);

/// H(t_{k+1}) ≤ H(t_k) + tol_per_record for consecutive records.
InequalityReport check_nonincreasing(std::span<const EnergyRecord> ledger, double tol_per_record);

struct SweepRow {
  double epsilon = 0.0;
  double sup_l2 = 0.0;
  double sup_linf = 0.0;
  bool aborted = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  /// Deviations strictly decrease along the non-aborted rows.
  bool monotone = true;
  /// sup_l2 ratios between consecutive nonzero-ε rows.
  std::vector<double> ratios;
};

/// Runs evolve for each ε on identical data and dt and measures the
/// deviation from the ε = 0 run at every ledger record. Member runs execute
/// on up to `threads` concurrent workers.
SweepResult epsilon_sweep(const MapState& initial, const SolverConfig& config,
                          std::span<const double> eps_list, int threads = 1);

void write_ledger_csv(std::ostream& os, std::span<const EnergyRecord> ledger);
void write_ledger_csv(const std::string& path, std::span<const EnergyRecord> ledger);

}  // namespace solitonsim::evolver

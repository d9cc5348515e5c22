#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "solitonsim/grid.hpp"

namespace solitonsim::elliptic {

using grid::GridField;

enum class Mode { gradient_flow, residual_descent };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct EllipticConfig {
  /// Step of the descent flow (gradient_flow only); must satisfy flow_dt ≤ h²/4.
  double flow_dt = 0.0;
  int max_iters = 100000;
  /// Stop once the discrete L∞ norm of τ(u) + ∇Λ(u) is at or below this.
  double residual_target = 1e-8;
  Mode mode = Mode::residual_descent;

  void validate(const grid::Grid1D& g) const;
};

/// F(u) = ½‖D₊u‖²_{L²} - ∫Λ(u), with the forward-difference Dirichlet energy
/// whose gradient is the 3-point Laplacian.
double functional_F(const GridField& u);

/// Discrete tension field τ_h(u) = P(u)Δ_h u.
GridField tension(const GridField& u);

struct Residual {
  GridField field;
  double linf = 0.0;
};

/// r = τ_h(u) + ∇Λ(u); zero exactly on discrete solutions of τ(u) = -∇Λ(u).
Residual elliptic_residual(const GridField& u);

struct HistoryRow {
  int iter = 0;
  double F = 0.0;
  double residual_linf = 0.0;
};

struct EllipticResult {
  GridField u;
  std::vector<HistoryRow> history;
  bool converged = false;
  int iterations = 0;
};

/// gradient_flow: u ← normalize(u + flow_dt (τ(u) + ∇Λ(u))), the descent flow
/// of F; finds minimizers such as the north pole.
/// residual_descent: damped Gauss–Newton on ½‖r(u)‖² over tangent
/// perturbations u ← normalize(u + a e1 + b e2); finds saddle points of F
/// such as the latitude circles k² cosθ = -1.
EllipticResult solve_elliptic(const GridField& u_init, const EllipticConfig& config);

void write_history_csv(std::ostream& os, std::span<const HistoryRow> history);
void write_history_csv(const std::string& path, std::span<const HistoryRow> history);

}  // namespace solitonsim::elliptic

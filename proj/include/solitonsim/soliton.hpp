#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "solitonsim/evolver.hpp"
#include "solitonsim/grid.hpp"

namespace solitonsim::soliton {

using grid::GridField;

struct ResidualReport {
  double l2 = 0.0;
  double linf = 0.0;
  /// Nodes along the refined axis (n in 1D, ny for sheets).
  int n = 0;
  std::optional<double> order;

  nlohmann::json to_json() const;
  static ResidualReport from_json(const nlohmann::json& j);
};

/// log₂(coarse.l2 / fine.l2) for a grid pair (n, 2n).
double refinement_order(const ResidualReport& coarse, const ResidualReport& fine);

/// r_i = V(u_i) - u_i × (Δu_i + |diff1 u_i|² u_i): the t = 0 residual of
/// ∂_t w - J(w)τ(w) for w(t) = S_t∘u.
GridField schrodinger_residual_field(const GridField& u);
ResidualReport schrodinger_residual(const GridField& u);

/// Frame j = S_{times[j]}∘u.
std::vector<GridField> build_soliton_frames(const GridField& u, std::span<const double> times);

enum class SheetBoundary {
  /// Periodic in both x and y.
  periodic,
  /// Time history in x (open ends): only interior rows 1..nx-2 are evaluated.
  open_x,
};

/// r = e₃×u - u×□u with □ = ∂ₓ² - ∂_y² in second differences.
GridField ishimori_residual_field(const GridField& sheet, SheetBoundary boundary);
ResidualReport ishimori_residual(const GridField& sheet,
                                 SheetBoundary boundary = SheetBoundary::periodic);

struct PhiResult {
  GridField phi;
  GridField rhs;
  /// ∫ rhs over the torus; equals 8π·degree in the continuum.
  double compatibility = 0.0;
  double mean = 0.0;
  double degree = 0.0;
  bool compatible = true;
  /// ‖Δφ - (rhs - mean)‖ / ‖rhs - mean‖ (0 when rhs ≡ 0).
  double poisson_relative_residual = 0.0;
  std::string warning;
};

/// Solves Δφ = 2 s·(∂ₓs × ∂_y s) for the mean-zero φ. A sheet whose estimated
/// degree magnitude reaches `degree_tol` is flagged incompatible and solved
/// with the mean removed.
PhiResult ishimori_phi(const GridField& sheet, double degree_tol = 0.5);

/// max over samples of |M(u×X) - M(u)×M(X)| for a linear map M of R³.
double intertwining_defect(const Eigen::Matrix3d& map, std::span<const std::pair<Vec3, Vec3>> samples);
/// intertwining_defect for the rotation S_α about z.
double holomorphic_isometry_check(double alpha, std::span<const std::pair<Vec3, Vec3>> samples);

/// Runs the wave evolver on `initial` (a map of the y-circle) and stacks the
/// `rows` states u(t = i·dt) into a sheet on Grid2D{rows, n, rows·dt, L};
/// the timelike coordinate becomes x.
GridField wave_sheet(const evolver::MapState& initial, const evolver::SolverConfig& config,
                     int rows);

}  // namespace solitonsim::soliton

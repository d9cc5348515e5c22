#include "solitonsim/soliton.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

#include "solitonsim/error.hpp"

namespace solitonsim::soliton {

using geometry::sphere::kE3;

nlohmann::json ResidualReport::to_json() const {
  nlohmann::json j;
  j["l2"] = l2;
  j["linf"] = linf;
  j["n"] = n;
  j["order"] = order ? nlohmann::json(*order) : nlohmann::json(nullptr);
  return j;
}

ResidualReport ResidualReport::from_json(const nlohmann::json& j) {
  ResidualReport r;
  r.l2 = j.at("l2").get<double>();
  r.linf = j.at("linf").get<double>();
  r.n = j.at("n").get<int>();
  if (j.contains("order") && !j.at("order").is_null()) r.order = j.at("order").get<double>();
  return r;
}

double refinement_order(const ResidualReport& coarse, const ResidualReport& fine) {
  if (!(coarse.l2 > 0.0) || !(fine.l2 > 0.0)) {
    throw PreconditionError("refinement_order: residuals must be positive");
  }
  return std::log2(coarse.l2 / fine.l2);
}

namespace {

void require_unit(const GridField& u, const char* what) {
  if (u.components() != 3) throw PreconditionError(std::string(what) + ": expects an S^2 map");
  for (int i = 0; i < u.nodes(); ++i) {
    if (std::abs(u.vec3(i).norm() - 1.0) > geometry::kUnitTol) {
      throw PreconditionError(fmt::format("{}: node {} is not unit", what, i));
    }
  }
}

}  // namespace

GridField schrodinger_residual_field(const GridField& u) {
  require_unit(u, "schrodinger_residual");
  const GridField lap = grid::laplacian(u);
  const GridField ux = grid::diff1(u);
  GridField r(u.shape(), 3);
  for (int i = 0; i < u.nodes(); ++i) {
    const Vec3 ui = u.vec3(i);
    const Vec3 tau = lap.vec3(i) + ux.vec3(i).squaredNorm() * ui;
    r.set(i, geometry::sphere::killing_field(ui) - ui.cross(tau));
  }
  return r;
}

ResidualReport schrodinger_residual(const GridField& u) {
  const GridField r = schrodinger_residual_field(u);
  return {grid::l2_norm(r), grid::linf_norm(r), u.shape().grid1d().n, std::nullopt};
}

std::vector<GridField> build_soliton_frames(const GridField& u, std::span<const double> times) {
  require_unit(u, "build_soliton_frames");
  std::vector<GridField> frames;
  frames.reserve(times.size());
  for (double t : times) {
    const Eigen::Matrix3d rot = geometry::sphere::rotation_z(t);
    GridField f(u.shape(), 3);
    for (int i = 0; i < u.nodes(); ++i) f.set(i, rot * u.vec3(i));
    frames.push_back(std::move(f));
  }
  return frames;
}

GridField ishimori_residual_field(const GridField& sheet, SheetBoundary boundary) {
  require_unit(sheet, "ishimori_residual");
  const grid::Grid2D& g = sheet.shape().grid2d();
  const GridField uxx = grid::second_diff_x(sheet);
  const GridField uyy = grid::second_diff_y(sheet);
  GridField r(sheet.shape(), 3);
  const int first = boundary == SheetBoundary::open_x ? 1 : 0;
  const int last = boundary == SheetBoundary::open_x ? g.nx - 1 : g.nx;
  for (int i = first; i < last; ++i) {
    for (int j = 0; j < g.ny; ++j) {
      const int k = g.index(i, j);
      const Vec3 u = sheet.vec3(k);
      r.set(k, kE3.cross(u) - u.cross(uxx.vec3(k) - uyy.vec3(k)));
    }
  }
  return r;
}

ResidualReport ishimori_residual(const GridField& sheet, SheetBoundary boundary) {
  const GridField r = ishimori_residual_field(sheet, boundary);
  // Rows outside the evaluated range are zero in r and do not contribute.
  return {grid::l2_norm(r), grid::linf_norm(r), sheet.shape().grid2d().ny, std::nullopt};
}

PhiResult ishimori_phi(const GridField& sheet, double degree_tol) {
  require_unit(sheet, "ishimori_phi");
  const grid::Grid2D& g = sheet.shape().grid2d();
  const GridField sx = grid::diff1_x(sheet);
  const GridField sy = grid::diff1_y(sheet);
  GridField rhs(sheet.shape(), 1);
  for (int k = 0; k < sheet.nodes(); ++k) {
    rhs(k, 0) = 2.0 * sheet.vec3(k).dot(sx.vec3(k).cross(sy.vec3(k)));
  }
  PhiResult out{grid::poisson_solve_mean_free(rhs), rhs, 0.0, 0.0, 0.0, true, 0.0, {}};
  out.compatibility = grid::integrate(rhs);
  out.mean = out.compatibility / (g.lx * g.ly);
  out.degree = out.compatibility / (8.0 * std::numbers::pi);
  if (std::abs(out.degree) >= degree_tol) {
    out.compatible = false;
    out.warning = fmt::format(
        "rhs integrates to {:.6g} (degree ~ {:.3f}); solved with the mean removed",
        out.compatibility, out.degree);
  }
  GridField centered = rhs;
  for (double& x : centered.values()) x -= out.mean;
  const double scale = grid::l2_norm(centered);
  if (scale > 0.0) {
    GridField res = grid::laplacian(out.phi);
    for (size_t q = 0; q < res.values().size(); ++q) res.values()[q] -= centered.values()[q];
    out.poisson_relative_residual = grid::l2_norm(res) / scale;
  }
  return out;
}

double intertwining_defect(const Eigen::Matrix3d& map,
                           std::span<const std::pair<Vec3, Vec3>> samples) {
  double worst = 0.0;
  for (const auto& [u, x] : samples) {
    if (std::abs(u.norm() - 1.0) > geometry::kUnitTol ||
        std::abs(u.dot(x)) > geometry::kUnitTol * std::max(1.0, x.norm())) {
      throw PreconditionError("intertwining_defect: samples must be (unit u, tangent X)");
    }
    const Vec3 lhs = map * u.cross(x);
    const Vec3 rhs = (map * u).cross(map * x);
    worst = std::max(worst, (lhs - rhs).norm());
  }
  return worst;
}

double holomorphic_isometry_check(double alpha, std::span<const std::pair<Vec3, Vec3>> samples) {
  return intertwining_defect(geometry::sphere::rotation_z(alpha), samples);
}

GridField wave_sheet(const evolver::MapState& initial, const evolver::SolverConfig& config,
                     int rows) {
  if (rows < 3) throw ValidationError("wave_sheet: need at least 3 rows");
  config.validate(initial.grid);
  evolver::check_invariants(initial);
  const int n = initial.grid.n;
  const grid::Grid2D g{rows, n, rows * config.dt, initial.grid.length};
  GridField sheet(g, 3);
  evolver::MapState s = initial;
  for (int i = 0; i < rows; ++i) {
    if (i > 0) s = evolver::step(s, config, config.dt, i - 1);
    for (int j = 0; j < n; ++j) sheet.set(g.index(i, j), s.u.vec3(j));
  }
  return sheet;
}

}  // namespace solitonsim::soliton

#pragma once

#include <iosfwd>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "solitonsim/geometry.hpp"

namespace solitonsim::grid {

/// Uniform periodic grid on a circle of circumference `length`.
struct Grid1D {
  int n = 0;
  double length = 2.0 * std::numbers::pi;

  double spacing() const { return length / n; }
  double node(int i) const { return i * spacing(); }
  void validate() const;
  bool operator==(const Grid1D&) const = default;
};

/// Uniform periodic grid on a torus; node (i, j) ↔ (x_i, y_j), row-major in x.
struct Grid2D {
  int nx = 0;
  int ny = 0;
  double lx = 2.0 * std::numbers::pi;
  double ly = 2.0 * std::numbers::pi;

  double hx() const { return lx / nx; }
  double hy() const { return ly / ny; }
  int index(int i, int j) const { return i * ny + j; }
  void validate() const;
  bool operator==(const Grid2D&) const = default;
};

/// Grid descriptor shared by 1D and 2D fields.
class GridShape {
 public:
  GridShape(const Grid1D& g);  // NOLINT(google-explicit-constructor)
  GridShape(const Grid2D& g);  // NOLINT(google-explicit-constructor)

  int dims() const { return dims_; }
  int nodes() const { return dims_ == 1 ? g1_.n : g2_.nx * g2_.ny; }
  const Grid1D& grid1d() const;
  const Grid2D& grid2d() const;
  bool operator==(const GridShape& other) const;

 private:
  int dims_;
  Grid1D g1_{};
  Grid2D g2_{};
};

/// K values per node (K = 1 for scalar fields, 3 for maps into S²).
class GridField {
 public:
  GridField(GridShape shape, int components);

  const GridShape& shape() const { return shape_; }
  int components() const { return components_; }
  int nodes() const { return shape_.nodes(); }

  double& operator()(int node, int c) { return data_[static_cast<size_t>(node) * components_ + c]; }
  double operator()(int node, int c) const {
    return data_[static_cast<size_t>(node) * components_ + c];
  }
  std::span<double> node(int i) {
    return {data_.data() + static_cast<size_t>(i) * components_, static_cast<size_t>(components_)};
  }
  std::span<const double> node(int i) const {
    return {data_.data() + static_cast<size_t>(i) * components_, static_cast<size_t>(components_)};
  }

  Vec3 vec3(int i) const {
    const double* p = data_.data() + static_cast<size_t>(i) * 3;
    return {p[0], p[1], p[2]};
  }
  void set(int i, const Vec3& x) {
    double* p = data_.data() + static_cast<size_t>(i) * 3;
    p[0] = x.x();
    p[1] = x.y();
    p[2] = x.z();
  }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool operator==(const GridField& other) const = default;

 private:
  GridShape shape_;
  int components_;
  std::vector<double> data_;
};

/// Central first difference (f_{i+1} - f_{i-1}) / 2h on a 1D grid.
GridField diff1(const GridField& f);
/// Central first differences along x and y on a 2D grid.
GridField diff1_x(const GridField& f);
GridField diff1_y(const GridField& f);
/// Forward difference (f_{i+1} - f_i) / h on a 1D grid; pairs with the
/// 3-point Laplacian through summation by parts.
GridField forward_diff1(const GridField& f);

/// 3-point (1D) or 5-point (2D) Laplacian.
GridField laplacian(const GridField& f);
/// Second differences along a single axis of a 2D grid.
GridField second_diff_x(const GridField& f);
GridField second_diff_y(const GridField& f);

/// Rectangle-rule quadrature of a scalar field.
double integrate(const GridField& f);
/// Quadrature of Σ_c f_c g_c.
double integrate_dot(const GridField& f, const GridField& g);
double l2_norm(const GridField& f);
/// max over nodes of the Euclidean norm of the node value.
double linf_norm(const GridField& f);

/// Σ_{l≤k} ‖D^l s‖_{L²} for the section s = (v, diff1 u) with D X = P(u) diff1 X.
double sobolev_seminorm(const GridField& u, const GridField& v, int k);
double sobolev_seminorm(const GridField& u, int k);

/// Eigenvalue magnitude (2 - 2cos(m h)) / h² of the 3-point stencil on mode m.
double stencil_symbol(double wavenumber_times_h, double h);

/// Mean-zero φ with discrete Δφ = rhs - mean(rhs). Throws CompatibilityError if
/// |∫rhs| > compat_tol · ‖rhs‖_{L²}.
GridField poisson_solve_periodic(const GridField& rhs, double compat_tol = 1e-10);
/// As above but always removes the mean without a compatibility check.
GridField poisson_solve_mean_free(const GridField& rhs);

/// CSV: header `x[,y],c0,...,c{K-1}`, one node per row, 17 significant digits.
void write_csv(std::ostream& os, const GridField& f);
void write_csv(const std::string& path, const GridField& f);
/// Reads a field written by write_csv; the grid is reconstructed from the
/// coordinate columns (uniform spacing, period = node count × spacing).
GridField read_csv(std::istream& is);
GridField read_csv(const std::string& path);

}  // namespace solitonsim::grid

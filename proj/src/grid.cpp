#include "solitonsim/grid.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "solitonsim/error.hpp"

namespace solitonsim::grid {

void Grid1D::validate() const {
  if (n < 8) throw ValidationError(fmt::format("grid: n must be >= 8 (got {})", n));
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw ValidationError("grid: length must be positive and finite");
  }
}

void Grid2D::validate() const {
  if (nx < 8 || ny < 8) {
    throw ValidationError(fmt::format("grid: nx, ny must be >= 8 (got {}, {})", nx, ny));
  }
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
    throw ValidationError("grid: lengths must be positive and finite");
  }
}

GridShape::GridShape(const Grid1D& g) : dims_(1), g1_(g) {}
GridShape::GridShape(const Grid2D& g) : dims_(2), g2_(g) {}

const Grid1D& GridShape::grid1d() const {
  if (dims_ != 1) throw PreconditionError("field is not on a 1D grid");
  return g1_;
}

const Grid2D& GridShape::grid2d() const {
  if (dims_ != 2) throw PreconditionError("field is not on a 2D grid");
  return g2_;
}

bool GridShape::operator==(const GridShape& other) const {
  if (dims_ != other.dims_) return false;
  return dims_ == 1 ? g1_ == other.g1_ : g2_ == other.g2_;
}

GridField::GridField(GridShape shape, int components)
    : shape_(shape),
      components_(components),
      data_(static_cast<size_t>(shape.nodes()) * components, 0.0) {
  if (components < 1) throw PreconditionError("GridField: components must be >= 1");
}

namespace {

// out(i) = Σ_k w_k f(i + offset_k) along one periodic axis, times scale.
template <size_t N>
GridField axis_stencil(const GridField& f, int axis, const std::array<int, N>& offsets,
                       const std::array<double, N>& weights, double scale) {
  GridField out(f.shape(), f.components());
  const int kc = f.components();
  if (f.shape().dims() == 1) {
    const int n = f.shape().grid1d().n;
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < kc; ++c) {
        double acc = 0.0;
        for (size_t s = 0; s < N; ++s) acc += weights[s] * f((i + offsets[s] + n) % n, c);
        out(i, c) = scale * acc;
      }
    }
    return out;
  }
  const Grid2D& g = f.shape().grid2d();
  for (int i = 0; i < g.nx; ++i) {
    for (int j = 0; j < g.ny; ++j) {
      for (int c = 0; c < kc; ++c) {
        double acc = 0.0;
        for (size_t s = 0; s < N; ++s) {
          const int ii = axis == 0 ? (i + offsets[s] + g.nx) % g.nx : i;
          const int jj = axis == 1 ? (j + offsets[s] + g.ny) % g.ny : j;
          acc += weights[s] * f(g.index(ii, jj), c);
        }
        out(g.index(i, j), c) = scale * acc;
      }
    }
  }
  return out;
}

double axis_spacing(const GridField& f, int axis) {
  if (f.shape().dims() == 1) return f.shape().grid1d().spacing();
  return axis == 0 ? f.shape().grid2d().hx() : f.shape().grid2d().hy();
}

GridField central(const GridField& f, int axis) {
  return axis_stencil<2>(f, axis, {1, -1}, {1.0, -1.0}, 1.0 / (2.0 * axis_spacing(f, axis)));
}

GridField second(const GridField& f, int axis) {
  const double h = axis_spacing(f, axis);
  return axis_stencil<3>(f, axis, {1, 0, -1}, {1.0, -2.0, 1.0}, 1.0 / (h * h));
}

double cell_volume(const GridShape& s) {
  if (s.dims() == 1) return s.grid1d().spacing();
  return s.grid2d().hx() * s.grid2d().hy();
}

}  // namespace

GridField diff1(const GridField& f) {
  f.shape().grid1d();
  return central(f, 0);
}

GridField diff1_x(const GridField& f) {
  f.shape().grid2d();
  return central(f, 0);
}

GridField diff1_y(const GridField& f) {
  f.shape().grid2d();
  return central(f, 1);
}

GridField forward_diff1(const GridField& f) {
  const double h = f.shape().grid1d().spacing();
  return axis_stencil<2>(f, 0, {1, 0}, {1.0, -1.0}, 1.0 / h);
}

GridField laplacian(const GridField& f) {
  if (f.shape().dims() == 1) return second(f, 0);
  GridField out = second(f, 0);
  const GridField yy = second(f, 1);
  for (size_t k = 0; k < out.values().size(); ++k) out.values()[k] += yy.values()[k];
  return out;
}

GridField second_diff_x(const GridField& f) {
  f.shape().grid2d();
  return second(f, 0);
}

GridField second_diff_y(const GridField& f) {
  f.shape().grid2d();
  return second(f, 1);
}

double integrate(const GridField& f) {
  if (f.components() != 1) throw PreconditionError("integrate: expects a scalar field");
  double sum = 0.0;
  for (double x : f.values()) sum += x;
  return cell_volume(f.shape()) * sum;
}

double integrate_dot(const GridField& f, const GridField& g) {
  if (!(f.shape() == g.shape()) || f.components() != g.components()) {
    throw PreconditionError("integrate_dot: fields live on different grids");
  }
  double sum = 0.0;
  for (size_t k = 0; k < f.values().size(); ++k) sum += f.values()[k] * g.values()[k];
  return cell_volume(f.shape()) * sum;
}

double l2_norm(const GridField& f) { return std::sqrt(integrate_dot(f, f)); }

double linf_norm(const GridField& f) {
  double m = 0.0;
  for (int i = 0; i < f.nodes(); ++i) {
    double s = 0.0;
    for (double x : f.node(i)) s += x * x;
    m = std::max(m, std::sqrt(s));
  }
  return m;
}

namespace {

GridField covariant_diff(const GridField& u, const GridField& x) {
  GridField dx = diff1(x);
  for (int i = 0; i < u.nodes(); ++i) {
    dx.set(i, geometry::sphere::tangent_part(u.vec3(i), dx.vec3(i)));
  }
  return dx;
}

}  // namespace

double sobolev_seminorm(const GridField& u, const GridField& v, int k) {
  if (k < 0 || k > 4) throw PreconditionError("sobolev_seminorm: k must lie in [0, 4]");
  if (u.components() != 3 || v.components() != 3 || !(u.shape() == v.shape())) {
    throw PreconditionError("sobolev_seminorm: expects matching S^2-valued fields");
  }
  for (int i = 0; i < u.nodes(); ++i) {
    if (std::abs(u.vec3(i).norm() - 1.0) > geometry::kUnitTol) {
      throw PreconditionError(fmt::format("sobolev_seminorm: node {} is not unit", i));
    }
  }
  GridField sv = v;
  GridField sx = diff1(u);
  double total = 0.0;
  for (int l = 0; l <= k; ++l) {
    if (l > 0) {
      sv = covariant_diff(u, sv);
      sx = covariant_diff(u, sx);
    }
    total += std::sqrt(integrate_dot(sv, sv) + integrate_dot(sx, sx));
  }
  return total;
}

double sobolev_seminorm(const GridField& u, int k) {
  return sobolev_seminorm(u, GridField(u.shape(), 3), k);
}

double stencil_symbol(double wavenumber_times_h, double h) {
  return (2.0 - 2.0 * std::cos(wavenumber_times_h)) / (h * h);
}

// ---------------------------------------------------------------------------
// CSV

void write_csv(std::ostream& os, const GridField& f) {
  const bool two_d = f.shape().dims() == 2;
  os << (two_d ? "x,y" : "x");
  for (int c = 0; c < f.components(); ++c) os << ",c" << c;
  os << '\n';
  std::string line;
  for (int i = 0; i < f.nodes(); ++i) {
    line.clear();
    if (two_d) {
      const Grid2D& g = f.shape().grid2d();
      line += fmt::format("{:.17g},{:.17g}", (i / g.ny) * g.hx(), (i % g.ny) * g.hy());
    } else {
      line += fmt::format("{:.17g}", f.shape().grid1d().node(i));
    }
    for (double x : f.node(i)) line += fmt::format(",{:.17g}", x);
    os << line << '\n';
  }
}

void write_csv(const std::string& path, const GridField& f) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_csv(os, f);
}

GridField read_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw ValidationError("csv: empty input");
  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string tok;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
  }
  if (cols.empty() || cols[0] != "x") throw ValidationError("csv: header must start with x");
  const bool two_d = cols.size() > 1 && cols[1] == "y";
  const int coord_cols = two_d ? 2 : 1;
  const int k = static_cast<int>(cols.size()) - coord_cols;
  if (k < 1) throw ValidationError("csv: no value columns");
  for (int c = 0; c < k; ++c) {
    if (cols[coord_cols + c] != "c" + std::to_string(c)) {
      throw ValidationError("csv: unexpected column name " + cols[coord_cols + c]);
    }
  }

  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        row.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ValidationError("csv: malformed number '" + tok + "'");
      }
    }
    if (row.size() != cols.size()) {
      throw ValidationError(fmt::format("csv: row {} has {} columns, expected {}", rows.size() + 1,
                                        row.size(), cols.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw ValidationError("csv: need at least two nodes");

  auto fill = [&](GridField f) {
    for (size_t r = 0; r < rows.size(); ++r) {
      for (int c = 0; c < k; ++c) f(static_cast<int>(r), c) = rows[r][coord_cols + c];
    }
    return f;
  };

  if (!two_d) {
    const int n = static_cast<int>(rows.size());
    return fill(GridField(Grid1D{n, n * (rows[1][0] - rows[0][0])}, k));
  }
  int ny = 1;
  while (ny < static_cast<int>(rows.size()) && rows[ny][0] == rows[0][0]) ++ny;
  const int total = static_cast<int>(rows.size());
  if (total % ny != 0 || ny < 2 || total / ny < 2) {
    throw ValidationError("csv: 2D node layout is not a full rectangular grid");
  }
  const int nx = total / ny;
  const double hx = rows[ny][0] - rows[0][0];
  const double hy = rows[1][1] - rows[0][1];
  return fill(GridField(Grid2D{nx, ny, nx * hx, ny * hy}, k));
}

GridField read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open " + path);
  return read_csv(is);
}

}  // namespace solitonsim::grid

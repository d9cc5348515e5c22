#include <fftw3.h>
#include <fmt/format.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>

#include "solitonsim/error.hpp"
#include "solitonsim/grid.hpp"

namespace solitonsim::grid {

namespace {

// Planner calls are not thread-safe in FFTW; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

struct PlanDestroy {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};

using PlanPtr = std::unique_ptr<fftw_plan_s, PlanDestroy>;

GridField solve_mean_removed(const GridField& rhs) {
  const Grid2D& g = rhs.shape().grid2d();
  if (rhs.components() != 1) throw PreconditionError("poisson: expects a scalar field");
  const int nx = g.nx;
  const int ny = g.ny;
  const int nyc = ny / 2 + 1;
  const size_t nreal = static_cast<size_t>(nx) * ny;
  const size_t ncplx = static_cast<size_t>(nx) * nyc;

  std::unique_ptr<double, FftwFree> real(static_cast<double*>(fftw_malloc(sizeof(double) * nreal)));
  std::unique_ptr<fftw_complex, FftwFree> spec(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * ncplx)));

  PlanPtr forward;
  PlanPtr backward;
  {
    std::lock_guard lock(planner_mutex());
    forward.reset(fftw_plan_dft_r2c_2d(nx, ny, real.get(), spec.get(), FFTW_ESTIMATE));
    backward.reset(fftw_plan_dft_c2r_2d(nx, ny, spec.get(), real.get(), FFTW_ESTIMATE));
  }

  std::copy(rhs.values().begin(), rhs.values().end(), real.get());
  fftw_execute(forward.get());

  const double hx = g.hx();
  const double hy = g.hy();
  const double norm = 1.0 / static_cast<double>(nreal);
  for (int kx = 0; kx < nx; ++kx) {
    const double sx = stencil_symbol(2.0 * std::numbers::pi * kx / nx, hx);
    for (int ky = 0; ky < nyc; ++ky) {
      const double sy = stencil_symbol(2.0 * std::numbers::pi * ky / ny, hy);
      fftw_complex& c = spec.get()[static_cast<size_t>(kx) * nyc + ky];
      if (kx == 0 && ky == 0) {
        c[0] = 0.0;
        c[1] = 0.0;
        continue;
      }
      const double scale = -norm / (sx + sy);
      c[0] *= scale;
      c[1] *= scale;
    }
  }
  fftw_execute(backward.get());

  GridField phi(rhs.shape(), 1);
  std::copy(real.get(), real.get() + nreal, phi.values().begin());
  return phi;
}

}  // namespace

GridField poisson_solve_periodic(const GridField& rhs, double compat_tol) {
  const double total = integrate(rhs);
  const double scale = l2_norm(rhs);
  if (std::abs(total) > compat_tol * scale) {
    const Grid2D& g = rhs.shape().grid2d();
    const double mean = total / (g.lx * g.ly);
    throw CompatibilityError(
        fmt::format("poisson: right-hand side has nonzero mean {:.6g} (not solvable on the torus)",
                    mean),
        mean);
  }
  return solve_mean_removed(rhs);
}

GridField poisson_solve_mean_free(const GridField& rhs) { return solve_mean_removed(rhs); }

}  // namespace solitonsim::grid

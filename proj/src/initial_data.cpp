#include "solitonsim/initial_data.hpp"

#include <cmath>
#include <numbers>

#include "solitonsim/error.hpp"

namespace solitonsim::initial_data {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

std::uint64_t CounterRng::bits(std::uint64_t counter) const {
  std::uint64_t z = seed_ + (counter + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double CounterRng::uniform_pm1(std::uint64_t counter) const {
  return 2.0 * static_cast<double>(bits(counter) >> 11) * 0x1.0p-53 - 1.0;
}

GridField pole(const Grid1D& g, bool north) {
  GridField u(g, 3);
  for (int i = 0; i < g.n; ++i) u.set(i, Vec3(0.0, 0.0, north ? 1.0 : -1.0));
  return u;
}

GridField latitude(const Grid1D& g, int k, double costheta, double phase) {
  if (!(std::abs(costheta) <= 1.0)) throw ValidationError("latitude: |costheta| must be <= 1");
  const double s = std::sqrt(1.0 - costheta * costheta);
  GridField u(g, 3);
  for (int i = 0; i < g.n; ++i) {
    const double angle = k * kTwoPi * i / g.n + phase;
    u.set(i, Vec3(s * std::cos(angle), s * std::sin(angle), costheta));
  }
  return u;
}

GridField rotation_velocity(const GridField& u, double omega) {
  GridField v(u.shape(), 3);
  for (int i = 0; i < u.nodes(); ++i) v.set(i, omega * geometry::sphere::killing_field(u.vec3(i)));
  return v;
}

GridField perturb(const GridField& base, double amplitude, std::uint64_t seed, int modes) {
  if (!(amplitude >= 0.0)) throw ValidationError("perturb: amplitude must be >= 0");
  if (modes < 1) throw ValidationError("perturb: modes must be >= 1");
  const int n = base.shape().grid1d().n;
  const CounterRng rng(seed);
  // Coefficients: [direction][mode][cos|sin].
  std::vector<double> coef(static_cast<size_t>(2 * modes * 2));
  for (size_t q = 0; q < coef.size(); ++q) coef[q] = rng.uniform_pm1(q);
  std::array<double, 2> scale{};
  for (int d = 0; d < 2; ++d) {
    double s = 0.0;
    for (int m = 0; m < 2 * modes; ++m) s += std::abs(coef[static_cast<size_t>(d * 2 * modes + m)]);
    scale[d] = s > 0.0 ? amplitude / s : 0.0;
  }
  GridField out(base.shape(), 3);
  for (int i = 0; i < n; ++i) {
    const double x = kTwoPi * i / n;
    std::array<double, 2> amp{};
    for (int d = 0; d < 2; ++d) {
      double acc = 0.0;
      for (int m = 0; m < modes; ++m) {
        const size_t q = static_cast<size_t>(d * 2 * modes + 2 * m);
        acc += coef[q] * std::cos((m + 1) * x) + coef[q + 1] * std::sin((m + 1) * x);
      }
      amp[d] = scale[d] * acc;
    }
    const Vec3 u = base.vec3(i);
    const auto [e1, e2] = geometry::sphere::frame(u);
    out.set(i, (u + amp[0] * e1 + amp[1] * e2).normalized());
  }
  return out;
}

GridField degree_one_sheet(const Grid2D& g, double radius) {
  if (!(radius > 0.0) || 2.0 * radius >= std::min(g.lx, g.ly)) {
    throw ValidationError("degree_one_sheet: radius must fit inside the window");
  }
  GridField s(g, 3);
  const double xc = 0.5 * g.lx;
  const double yc = 0.5 * g.ly;
  for (int i = 0; i < g.nx; ++i) {
    for (int j = 0; j < g.ny; ++j) {
      const double dx = i * g.hx() - xc;
      const double dy = j * g.hy() - yc;
      const double t = std::min(1.0, std::hypot(dx, dy) / radius);
      const double smooth = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
      const double theta = std::numbers::pi * smooth;
      const double phi = std::atan2(dy, dx);
      s.set(g.index(i, j), Vec3(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                                std::cos(theta)));
    }
  }
  return s;
}

GridField extrude_y(const GridField& profile, const Grid2D& g) {
  if (profile.shape().grid1d().n != g.nx) {
    throw PreconditionError("extrude_y: profile node count must equal nx");
  }
  GridField s(g, profile.components());
  for (int i = 0; i < g.nx; ++i) {
    for (int j = 0; j < g.ny; ++j) {
      for (int c = 0; c < profile.components(); ++c) s(g.index(i, j), c) = profile(i, c);
    }
  }
  return s;
}

}  // namespace solitonsim::initial_data

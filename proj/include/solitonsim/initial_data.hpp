#pragma once

#include <cstdint>

#include "solitonsim/grid.hpp"

namespace solitonsim::initial_data {

using grid::Grid1D;
using grid::Grid2D;
using grid::GridField;

/// Counter-based uniform generator: value(i) = SplitMix64 finalizer applied to
/// seed + (i+1)·0x9E3779B97F4A7C15, mapped to [-1, 1). Identical on every
/// platform and independent of call order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
  std::uint64_t bits(std::uint64_t counter) const;
  double uniform_pm1(std::uint64_t counter) const;

 private:
  std::uint64_t seed_;
};

/// Constant map to (0,0,±1).
GridField pole(const Grid1D& g, bool north = true);

/// u(x) = (sinθ cos(kx + phase), sinθ sin(kx + phase), cosθ), x ∈ [0, L) mapped to angle 2πx/L.
GridField latitude(const Grid1D& g, int k, double costheta, double phase = 0.0);

/// ω·(e₃ × u): the velocity of the latitude rigidly rotating about z.
GridField rotation_velocity(const GridField& u, double omega);

/// Smooth seeded tangent noise: u ← normalize(u + a e1 + b e2) where a, b are
/// random trigonometric polynomials of degree `modes` with sup-norm ≤ amplitude.
GridField perturb(const GridField& base, double amplitude, std::uint64_t seed, int modes = 4);

/// Degree-one sheet on a 2D grid: south pole outside a disk of `radius`
/// around the window center, wrapping once over S² inside.
GridField degree_one_sheet(const Grid2D& g, double radius);

/// Sheet constant along y: s(x_i, y_j) = profile(x_i).
GridField extrude_y(const GridField& profile, const Grid2D& g);

}  // namespace solitonsim::initial_data

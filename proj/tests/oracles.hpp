#pragma once

// Independent reference computations for the unit and acceptance tests. None
// of these call into the library's numerical kernels.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;

/// Classical RK4 for y' = f(y) on [0, t] with `steps` uniform steps.
inline Vec3 rk4(const std::function<Vec3(const Vec3&)>& f, Vec3 y, double t, int steps) {
  const double h = t / steps;
  for (int s = 0; s < steps; ++s) {
    const Vec3 k1 = f(y);
    const Vec3 k2 = f(y + 0.5 * h * k1);
    const Vec3 k3 = f(y + 0.5 * h * k2);
    const Vec3 k4 = f(y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

/// Normal part of γ''(0) for the great circle through u with velocity x,
/// from a central second difference of the curve itself. For unit-speed
/// geodesics of S² this is the second fundamental form A(u)(x, x).
inline Vec3 great_circle_normal_accel(const Vec3& u, const Vec3& x, double s = 1e-4) {
  const double speed = x.norm();
  if (speed == 0.0) return Vec3::Zero();
  const Vec3 w = x / speed;
  auto gamma = [&](double t) { return std::cos(speed * t) * u + std::sin(speed * t) * w; };
  const Vec3 acc = (gamma(s) - 2.0 * gamma(0.0) + gamma(-s)) / (s * s);
  return acc.dot(u) * u;
}

/// ‖HJ - JH‖₂ for the Riemannian Hessian on S² of the restriction of an
/// ambient function with gradient g and Hessian D at u:
/// Hess f(X, Y) = Xᵀ D Y - (g·u) X·Y, written in the frame (e1, u×e1).
inline double sphere_hessian_commutator(const Vec3& u, const Vec3& g, const Eigen::Matrix3d& D) {
  Vec3 e1 = Vec3::UnitZ().cross(u);
  if (e1.norm() < 0.5) e1 = Vec3::UnitX().cross(u);
  e1.normalize();
  const Vec3 e2 = u.cross(e1);
  const double gn = g.dot(u);
  Eigen::Matrix2d H;
  H(0, 0) = e1.dot(D * e1) - gn;
  H(0, 1) = e1.dot(D * e2);
  H(1, 0) = e2.dot(D * e1);
  H(1, 1) = e2.dot(D * e2) - gn;
  Eigen::Matrix2d J;
  J << 0.0, -1.0, 1.0, 0.0;
  return Eigen::JacobiSVD<Eigen::Matrix2d>(H * J - J * H).singularValues()(0);
}

/// Eigenvalue magnitude of the 3-point second difference on e^{iθx/h}.
inline double symbol(double theta, double h) { return (2.0 - 2.0 * std::cos(theta)) / (h * h); }

/// F on the latitude family: πk² sin²θ - 2π cosθ.
inline double latitude_F(int k, double costheta) {
  return kPi * k * k * (1.0 - costheta * costheta) - 2.0 * kPi * costheta;
}

/// Deviation of the static latitude under its linear instability:
/// δ(t) = δ(t₀)·(cosh σt - 1)/(cosh σt₀ - 1) with σ² = k² sin²θ, for a
/// constant forcing starting at rest.
inline double latitude_growth_ratio(int k, double costheta, double t, double t0) {
  const double sigma = std::sqrt(k * k * (1.0 - costheta * costheta));
  return (std::cosh(sigma * t) - 1.0) / (std::cosh(sigma * t0) - 1.0);
}

inline double order(double coarse, double fine, double ratio = 2.0) {
  return std::log(coarse / fine) / std::log(ratio);
}

}  // namespace oracle

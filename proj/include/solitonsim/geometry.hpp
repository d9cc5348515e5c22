#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <functional>

namespace solitonsim {

using Vec3 = Eigen::Vector3d;
using AmbientVector = Eigen::VectorXd;

namespace geometry {

/// Tolerance used by precondition checks for |u| = 1 and u·X = 0.
inline constexpr double kUnitTol = 1e-10;

/// Closed-form geometry of a target manifold N embedded in R^K together with
/// a potential Λ, the complex structure J, the field V = -J∇Λ and its flow.
class TargetGeometry {
 public:
  virtual ~TargetGeometry() = default;

  virtual int ambient_dim() const = 0;
  virtual bool contains(const AmbientVector& p, double tol = kUnitTol) const = 0;
  virtual bool is_tangent(const AmbientVector& u, const AmbientVector& x,
                          double tol = kUnitTol) const = 0;

  virtual AmbientVector project_point(const AmbientVector& p) const = 0;
  virtual AmbientVector project_tangent(const AmbientVector& u,
                                        const AmbientVector& x) const = 0;
  virtual double potential(const AmbientVector& u) const = 0;
  virtual AmbientVector grad_potential(const AmbientVector& u) const = 0;
  virtual AmbientVector complex_structure(const AmbientVector& u,
                                          const AmbientVector& x) const = 0;
  virtual AmbientVector killing_field(const AmbientVector& u) const = 0;
  virtual AmbientVector isometry_flow(double t, const AmbientVector& u) const = 0;

  /// Lorentzian trace A(u)(u_t,u_t) - A(u)(u_x,u_x) of the second fundamental form.
  virtual AmbientVector sff_trace_lorentz(const AmbientVector& u,
                                          const AmbientVector& ut,
                                          const AmbientVector& ux) const = 0;

  /// Orthonormal basis (e1, e2) of T_uN with J(u)e1 = e2.
  virtual std::array<AmbientVector, 2> tangent_frame(const AmbientVector& u) const = 0;
};

/// Unit sphere S² ⊂ R³, Λ(u) = u₃, J(u) = u×, V(u) = e₃×u, S_t = rotation about +z.
class Sphere final : public TargetGeometry {
 public:
  int ambient_dim() const override { return 3; }
  bool contains(const AmbientVector& p, double tol = kUnitTol) const override;
  bool is_tangent(const AmbientVector& u, const AmbientVector& x,
                  double tol = kUnitTol) const override;

  AmbientVector project_point(const AmbientVector& p) const override;
  AmbientVector project_tangent(const AmbientVector& u,
                                const AmbientVector& x) const override;
  double potential(const AmbientVector& u) const override;
  AmbientVector grad_potential(const AmbientVector& u) const override;
  AmbientVector complex_structure(const AmbientVector& u,
                                  const AmbientVector& x) const override;
  AmbientVector killing_field(const AmbientVector& u) const override;
  AmbientVector isometry_flow(double t, const AmbientVector& u) const override;
  AmbientVector sff_trace_lorentz(const AmbientVector& u, const AmbientVector& ut,
                                  const AmbientVector& ux) const override;
  std::array<AmbientVector, 2> tangent_frame(const AmbientVector& u) const override;
};

/// Flat torus S¹×S¹ ⊂ R⁴ with Λ = cos a (a the first angle). Λ is not a Killing
/// potential here, so V = -J∇Λ = sin(a)∂_b is not Killing and its flow is not
/// an isometry; the torus serves as a zero-curvature control target.
class FlatTorus final : public TargetGeometry {
 public:
  int ambient_dim() const override { return 4; }
  bool contains(const AmbientVector& p, double tol = kUnitTol) const override;
  bool is_tangent(const AmbientVector& u, const AmbientVector& x,
                  double tol = kUnitTol) const override;

  AmbientVector project_point(const AmbientVector& p) const override;
  AmbientVector project_tangent(const AmbientVector& u,
                                const AmbientVector& x) const override;
  double potential(const AmbientVector& u) const override;
  AmbientVector grad_potential(const AmbientVector& u) const override;
  AmbientVector complex_structure(const AmbientVector& u,
                                  const AmbientVector& x) const override;
  AmbientVector killing_field(const AmbientVector& u) const override;
  AmbientVector isometry_flow(double t, const AmbientVector& u) const override;
  AmbientVector sff_trace_lorentz(const AmbientVector& u, const AmbientVector& ut,
                                  const AmbientVector& ux) const override;
  std::array<AmbientVector, 2> tangent_frame(const AmbientVector& u) const override;

  static AmbientVector point(double a, double b);
};

using ScalarPotential = std::function<double(const AmbientVector&)>;

/// ‖HJ - JH‖₂ for the covariant Hessian H of `candidate` at u, built by central
/// differences of the tangent-projected gradient along geodesic-like curves
/// project_point(u ± s e_b). Vanishes (up to O(s²)) iff the candidate is a
/// Killing potential at u.
double hermitian_hessian_residual(const TargetGeometry& geom,
                                  const ScalarPotential& candidate,
                                  const AmbientVector& u, double fd_step = 1e-4);

/// ‖K + Kᵀ‖₂ for K_ab = <e_a, ∇_{e_b} V>; zero iff V is Killing at u.
double killing_symmetry_residual(const TargetGeometry& geom, const AmbientVector& u,
                                 double fd_step = 1e-4);

/// Unchecked S² kernels for the stencil loops. Valid off the sphere as
/// algebraic formulas (needed inside Runge–Kutta stages).
namespace sphere {

inline const Vec3 kE3{0.0, 0.0, 1.0};

inline Vec3 tangent_part(const Vec3& u, const Vec3& x) { return x - u.dot(x) * u; }

inline Vec3 grad_potential(const Vec3& u) { return kE3 - u.z() * u; }

inline Vec3 killing_field(const Vec3& u) { return kE3.cross(u); }

inline Vec3 rotate_z(double t, const Vec3& u) {
  const double c = std::cos(t);
  const double s = std::sin(t);
  return {c * u.x() - s * u.y(), s * u.x() + c * u.y(), u.z()};
}

inline Eigen::Matrix3d rotation_z(double t) {
  return Eigen::AngleAxisd(t, Vec3::UnitZ()).toRotationMatrix();
}

/// Normal coefficient λ of sff_trace_lorentz = λu.
inline double sff_coefficient(const Vec3& ut, const Vec3& ux) {
  return ux.squaredNorm() - ut.squaredNorm();
}

/// Orthonormal (e1, e2) ⊥ u with u×e1 = e2. Equivariant under rotations about
/// z away from the poles.
std::array<Vec3, 2> frame(const Vec3& u);

}  // namespace sphere
}  // namespace geometry
}  // namespace solitonsim

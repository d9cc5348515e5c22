#include "solitonsim/geometry.hpp"

#include <Eigen/Dense>

#include <string>

#include "solitonsim/error.hpp"

namespace solitonsim::geometry {

namespace {

void require_dim(const AmbientVector& x, int k, const char* what) {
  if (x.size() != k) {
    throw PreconditionError(std::string(what) + ": expected ambient dimension " +
                            std::to_string(k) + ", got " + std::to_string(x.size()));
  }
}

Vec3 as_vec3(const AmbientVector& x) { return {x[0], x[1], x[2]}; }

AmbientVector as_ambient(const Vec3& x) {
  AmbientVector out(3);
  out << x.x(), x.y(), x.z();
  return out;
}

double operator_norm_2x2(const Eigen::Matrix2d& m) {
  return Eigen::JacobiSVD<Eigen::Matrix2d>(m).singularValues()(0);
}

}  // namespace

namespace sphere {

std::array<Vec3, 2> frame(const Vec3& u) {
  Vec3 e1 = kE3.cross(u);
  if (e1.norm() < 0.5) e1 = Vec3::UnitX().cross(u);
  e1.normalize();
  return {e1, u.cross(e1)};
}

}  // namespace sphere

// ---------------------------------------------------------------------------
// Sphere

bool Sphere::contains(const AmbientVector& p, double tol) const {
  return p.size() == 3 && std::abs(p.norm() - 1.0) <= tol;
}

bool Sphere::is_tangent(const AmbientVector& u, const AmbientVector& x, double tol) const {
  return x.size() == 3 && std::abs(u.dot(x)) <= tol * std::max(1.0, x.norm());
}

AmbientVector Sphere::project_point(const AmbientVector& p) const {
  require_dim(p, 3, "project_point");
  const double r = p.norm();
  if (!(r > 0.0)) throw DomainError("project_point: zero vector has no projection onto S^2");
  return p / r;
}

AmbientVector Sphere::project_tangent(const AmbientVector& u, const AmbientVector& x) const {
  require_dim(u, 3, "project_tangent");
  require_dim(x, 3, "project_tangent");
  if (!contains(u)) throw PreconditionError("project_tangent: base point is not unit");
  return x - u.dot(x) * u;
}

double Sphere::potential(const AmbientVector& u) const {
  require_dim(u, 3, "potential");
  return u[2];
}

AmbientVector Sphere::grad_potential(const AmbientVector& u) const {
  require_dim(u, 3, "grad_potential");
  if (!contains(u)) throw PreconditionError("grad_potential: base point is not unit");
  return as_ambient(sphere::grad_potential(as_vec3(u)));
}

AmbientVector Sphere::complex_structure(const AmbientVector& u, const AmbientVector& x) const {
  require_dim(u, 3, "complex_structure");
  require_dim(x, 3, "complex_structure");
  if (!contains(u)) throw PreconditionError("complex_structure: base point is not unit");
  if (!is_tangent(u, x)) throw PreconditionError("complex_structure: vector is not tangent");
  return as_ambient(as_vec3(u).cross(as_vec3(x)));
}

AmbientVector Sphere::killing_field(const AmbientVector& u) const {
  require_dim(u, 3, "killing_field");
  if (!contains(u)) throw PreconditionError("killing_field: base point is not unit");
  return as_ambient(sphere::killing_field(as_vec3(u)));
}

AmbientVector Sphere::isometry_flow(double t, const AmbientVector& u) const {
  require_dim(u, 3, "isometry_flow");
  if (!contains(u)) throw PreconditionError("isometry_flow: base point is not unit");
  return as_ambient(sphere::rotate_z(t, as_vec3(u)));
}

AmbientVector Sphere::sff_trace_lorentz(const AmbientVector& u, const AmbientVector& ut,
                                        const AmbientVector& ux) const {
  require_dim(u, 3, "sff_trace_lorentz");
  require_dim(ut, 3, "sff_trace_lorentz");
  require_dim(ux, 3, "sff_trace_lorentz");
  if (!contains(u)) throw PreconditionError("sff_trace_lorentz: base point is not unit");
  if (!is_tangent(u, ut) || !is_tangent(u, ux)) {
    throw PreconditionError("sff_trace_lorentz: derivatives must be tangent");
  }
  return sphere::sff_coefficient(as_vec3(ut), as_vec3(ux)) * u;
}

std::array<AmbientVector, 2> Sphere::tangent_frame(const AmbientVector& u) const {
  require_dim(u, 3, "tangent_frame");
  const auto [e1, e2] = sphere::frame(as_vec3(u));
  return {as_ambient(e1), as_ambient(e2)};
}

// ---------------------------------------------------------------------------
// Flat torus. Coordinates (cos a, sin a, cos b, sin b); unit normals n1, n2 of
// the two circle factors; tangent basis t1 = ∂_a, t2 = ∂_b.

namespace {

AmbientVector torus_normal(const AmbientVector& u, int factor) {
  AmbientVector n = AmbientVector::Zero(4);
  n[2 * factor] = u[2 * factor];
  n[2 * factor + 1] = u[2 * factor + 1];
  return n;
}

AmbientVector torus_tangent(const AmbientVector& u, int factor) {
  AmbientVector t = AmbientVector::Zero(4);
  t[2 * factor] = -u[2 * factor + 1];
  t[2 * factor + 1] = u[2 * factor];
  return t;
}

}  // namespace

AmbientVector FlatTorus::point(double a, double b) {
  AmbientVector p(4);
  p << std::cos(a), std::sin(a), std::cos(b), std::sin(b);
  return p;
}

bool FlatTorus::contains(const AmbientVector& p, double tol) const {
  return p.size() == 4 && std::abs(std::hypot(p[0], p[1]) - 1.0) <= tol &&
         std::abs(std::hypot(p[2], p[3]) - 1.0) <= tol;
}

bool FlatTorus::is_tangent(const AmbientVector& u, const AmbientVector& x, double tol) const {
  if (x.size() != 4) return false;
  const double scale = tol * std::max(1.0, x.norm());
  return std::abs(torus_normal(u, 0).dot(x)) <= scale &&
         std::abs(torus_normal(u, 1).dot(x)) <= scale;
}

AmbientVector FlatTorus::project_point(const AmbientVector& p) const {
  require_dim(p, 4, "project_point");
  const double r1 = std::hypot(p[0], p[1]);
  const double r2 = std::hypot(p[2], p[3]);
  if (!(r1 > 0.0) || !(r2 > 0.0)) {
    throw DomainError("project_point: a circle factor has zero radius");
  }
  AmbientVector out(4);
  out << p[0] / r1, p[1] / r1, p[2] / r2, p[3] / r2;
  return out;
}

AmbientVector FlatTorus::project_tangent(const AmbientVector& u, const AmbientVector& x) const {
  require_dim(u, 4, "project_tangent");
  require_dim(x, 4, "project_tangent");
  if (!contains(u)) throw PreconditionError("project_tangent: base point is not on the torus");
  const AmbientVector n1 = torus_normal(u, 0);
  const AmbientVector n2 = torus_normal(u, 1);
  return x - n1.dot(x) * n1 - n2.dot(x) * n2;
}

double FlatTorus::potential(const AmbientVector& u) const {
  require_dim(u, 4, "potential");
  return u[0];
}

AmbientVector FlatTorus::grad_potential(const AmbientVector& u) const {
  AmbientVector e0 = AmbientVector::Zero(4);
  e0[0] = 1.0;
  return project_tangent(u, e0);
}

AmbientVector FlatTorus::complex_structure(const AmbientVector& u, const AmbientVector& x) const {
  require_dim(u, 4, "complex_structure");
  require_dim(x, 4, "complex_structure");
  if (!contains(u)) throw PreconditionError("complex_structure: base point is not on the torus");
  if (!is_tangent(u, x)) throw PreconditionError("complex_structure: vector is not tangent");
  const AmbientVector t1 = torus_tangent(u, 0);
  const AmbientVector t2 = torus_tangent(u, 1);
  return x.dot(t1) * t2 - x.dot(t2) * t1;
}

AmbientVector FlatTorus::killing_field(const AmbientVector& u) const {
  return -complex_structure(u, grad_potential(u));
}

AmbientVector FlatTorus::isometry_flow(double t, const AmbientVector& u) const {
  require_dim(u, 4, "isometry_flow");
  if (!contains(u)) throw PreconditionError("isometry_flow: base point is not on the torus");
  // a is constant along V = sin(a)∂_b, so b advances linearly.
  const double angle = t * u[1];
  AmbientVector out = u;
  out[2] = std::cos(angle) * u[2] - std::sin(angle) * u[3];
  out[3] = std::sin(angle) * u[2] + std::cos(angle) * u[3];
  return out;
}

AmbientVector FlatTorus::sff_trace_lorentz(const AmbientVector& u, const AmbientVector& ut,
                                           const AmbientVector& ux) const {
  require_dim(u, 4, "sff_trace_lorentz");
  require_dim(ut, 4, "sff_trace_lorentz");
  require_dim(ux, 4, "sff_trace_lorentz");
  if (!contains(u)) throw PreconditionError("sff_trace_lorentz: base point is not on the torus");
  if (!is_tangent(u, ut) || !is_tangent(u, ux)) {
    throw PreconditionError("sff_trace_lorentz: derivatives must be tangent");
  }
  AmbientVector out = AmbientVector::Zero(4);
  for (int f = 0; f < 2; ++f) {
    const double x2 = ux.segment<2>(2 * f).squaredNorm();
    const double t2 = ut.segment<2>(2 * f).squaredNorm();
    out += (x2 - t2) * torus_normal(u, f);
  }
  return out;
}

std::array<AmbientVector, 2> FlatTorus::tangent_frame(const AmbientVector& u) const {
  require_dim(u, 4, "tangent_frame");
  return {torus_tangent(u, 0), torus_tangent(u, 1)};
}

// ---------------------------------------------------------------------------
// Finite-difference verification of the Killing-potential conditions.

namespace {

AmbientVector ambient_gradient(const ScalarPotential& f, const AmbientVector& p, double step) {
  AmbientVector g(p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    AmbientVector plus = p;
    AmbientVector minus = p;
    plus[k] += step;
    minus[k] -= step;
    g[k] = (f(plus) - f(minus)) / (2.0 * step);
  }
  return g;
}

// M_ab = <e_a, d/ds field(project_point(u + s e_b))|_{s=0}> by central differences.
template <typename Field>
Eigen::Matrix2d covariant_derivative_matrix(const TargetGeometry& geom, const AmbientVector& u,
                                            double step, Field&& field) {
  const auto frame = geom.tangent_frame(u);
  if (std::abs(frame[0].norm() - 1.0) > 1e-12 || std::abs(frame[1].norm() - 1.0) > 1e-12 ||
      std::abs(frame[0].dot(frame[1])) > 1e-12) {
    throw Error("covariant derivative: degenerate tangent basis");
  }
  Eigen::Matrix2d m;
  for (int b = 0; b < 2; ++b) {
    const AmbientVector fp = field(geom.project_point(u + step * frame[b]));
    const AmbientVector fm = field(geom.project_point(u - step * frame[b]));
    const AmbientVector d = (fp - fm) / (2.0 * step);
    for (int a = 0; a < 2; ++a) m(a, b) = frame[a].dot(d);
  }
  return m;
}

void check_fd_inputs(const TargetGeometry& geom, const AmbientVector& u, double fd_step) {
  if (!geom.contains(u)) throw PreconditionError("finite-difference check: base point is off N");
  if (!(fd_step > 0.0) || fd_step > 1e-2) {
    throw PreconditionError("finite-difference check: fd_step must lie in (0, 1e-2]");
  }
}

}  // namespace

double hermitian_hessian_residual(const TargetGeometry& geom, const ScalarPotential& candidate,
                                  const AmbientVector& u, double fd_step) {
  check_fd_inputs(geom, u, fd_step);
  const auto tangent_gradient = [&](const AmbientVector& p) {
    return geom.project_tangent(p, ambient_gradient(candidate, p, fd_step));
  };
  const Eigen::Matrix2d hessian = covariant_derivative_matrix(geom, u, fd_step, tangent_gradient);
  Eigen::Matrix2d j;
  j << 0.0, -1.0, 1.0, 0.0;
  return operator_norm_2x2(hessian * j - j * hessian);
}

double killing_symmetry_residual(const TargetGeometry& geom, const AmbientVector& u,
                                 double fd_step) {
  check_fd_inputs(geom, u, fd_step);
  const auto field = [&](const AmbientVector& p) { return geom.killing_field(p); };
  const Eigen::Matrix2d k = covariant_derivative_matrix(geom, u, fd_step, field);
  return operator_norm_2x2(k + k.transpose());
}

}  // namespace solitonsim::geometry

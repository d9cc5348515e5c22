#include "solitonsim/elliptic.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "solitonsim/error.hpp"

namespace solitonsim::elliptic {

using geometry::sphere::grad_potential;
using geometry::sphere::tangent_part;

std::string to_string(Mode m) {
  return m == Mode::gradient_flow ? "gradient_flow" : "residual_descent";
}

Mode mode_from_string(const std::string& s) {
  if (s == "gradient_flow") return Mode::gradient_flow;
  if (s == "residual_descent") return Mode::residual_descent;
  throw ValidationError("unknown elliptic mode '" + s +
                        "' (expected gradient_flow or residual_descent)");
}

void EllipticConfig::validate(const grid::Grid1D& g) const {
  if (max_iters < 0) throw ValidationError("elliptic: max_iters must be >= 0");
  if (!(residual_target > 0.0)) throw ValidationError("elliptic: residual_target must be > 0");
  if (mode == Mode::gradient_flow) {
    const double h = g.spacing();
    if (!(flow_dt > 0.0) || flow_dt > h * h / 4.0 * (1.0 + 1e-12)) {
      throw ValidationError(fmt::format(
          "elliptic: flow_dt = {:.6g} must lie in (0, h^2/4 = {:.6g}]", flow_dt, h * h / 4.0));
    }
  }
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

double functional_F(const GridField& u) {
  require_unit(u, "functional_F");
  const int n = u.nodes();
  const double h = u.shape().grid1d().spacing();
  double dir = 0.0;
  double pot = 0.0;
  for (int i = 0; i < n; ++i) {
    dir += (u.vec3((i + 1) % n) - u.vec3(i)).squaredNorm();
    pot += u(i, 2);
  }
  return 0.5 * dir / h - h * pot;
}

GridField tension(const GridField& u) {
  GridField lap = grid::laplacian(u);
  for (int i = 0; i < u.nodes(); ++i) lap.set(i, tangent_part(u.vec3(i), lap.vec3(i)));
  return lap;
}

Residual elliptic_residual(const GridField& u) {
  require_unit(u, "elliptic_residual");
  Residual r{tension(u), 0.0};
  for (int i = 0; i < u.nodes(); ++i) r.field.set(i, r.field.vec3(i) + grad_potential(u.vec3(i)));
  r.linf = grid::linf_norm(r.field);
  return r;
}

namespace {

EllipticResult run_gradient_flow(const GridField& u0, const EllipticConfig& config) {
  EllipticResult res{u0, {}, false, 0};
  GridField& u = res.u;
  for (int it = 0;; ++it) {
    const Residual r = elliptic_residual(u);
    res.history.push_back({it, functional_F(u), r.linf});
    res.iterations = it;
    if (r.linf <= config.residual_target) {
      res.converged = true;
      break;
    }
    if (it >= config.max_iters) break;
    for (int i = 0; i < u.nodes(); ++i) {
      u.set(i, (u.vec3(i) + config.flow_dt * r.field.vec3(i)).normalized());
    }
  }
  return res;
}

using SparseMatrix = Eigen::SparseMatrix<double>;

double cost_of(const GridField& r) {
  double c = 0.0;
  for (double x : r.values()) c += x * x;
  return 0.5 * c;
}

// Jacobian of r(u) = P(u)Δu + e₃ - u₃u with respect to the frame coefficients
// (a_j, b_j) of the tangent perturbation δ_j = a_j e1_j + b_j e2_j.
SparseMatrix residual_jacobian(const GridField& u, const std::vector<std::array<Vec3, 2>>& frames) {
  const int n = u.nodes();
  const double h = u.shape().grid1d().spacing();
  const double c = 1.0 / (h * h);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(n) * 3 * 6);
  for (int i = 0; i < n; ++i) {
    const int ip = (i + 1) % n;
    const int im = (i + n - 1) % n;
    const Vec3 ui = u.vec3(i);
    const Vec3 lap = (u.vec3(ip) - 2.0 * ui + u.vec3(im)) * c;
    const double ulap = ui.dot(lap);
    for (int a = 0; a < 2; ++a) {
      const Vec3& d = frames[i][a];
      const Vec3 diag = -2.0 * c * d - d.dot(lap) * ui - ulap * d - d.z() * ui - ui.z() * d;
      for (int q = 0; q < 3; ++q) trip.emplace_back(3 * i + q, 2 * i + a, diag[q]);
      for (int j : {im, ip}) {
        const Vec3 off = c * tangent_part(ui, frames[j][a]);
        for (int q = 0; q < 3; ++q) trip.emplace_back(3 * i + q, 2 * j + a, off[q]);
      }
    }
  }
  SparseMatrix jac(3 * n, 2 * n);
  jac.setFromTriplets(trip.begin(), trip.end());
  return jac;
}

EllipticResult run_residual_descent(const GridField& u0, const EllipticConfig& config) {
  EllipticResult res{u0, {}, false, 0};
  GridField& u = res.u;
  const int n = u.nodes();
  Residual r = elliptic_residual(u);
  double cost = cost_of(r.field);
  res.history.push_back({0, functional_F(u), r.linf});
  double mu = -1.0;

  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  bool pattern_ready = false;
  for (int it = 1; r.linf > config.residual_target && it <= config.max_iters; ++it) {
    std::vector<std::array<Vec3, 2>> frames(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) frames[i] = geometry::sphere::frame(u.vec3(i));
    const SparseMatrix jac = residual_jacobian(u, frames);
    const Eigen::Map<const Eigen::VectorXd> rvec(r.field.values().data(), 3 * n);
    const Eigen::VectorXd grad = jac.transpose() * rvec;
    SparseMatrix normal = jac.transpose() * jac;
    const double max_diag = normal.diagonal().maxCoeff();
    const double mu_floor = 1e-15 * max_diag;
    if (mu < 0.0) mu = 1e-6 * max_diag;

    bool accepted = false;
    for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
      SparseMatrix damped = normal;
      for (int k = 0; k < damped.rows(); ++k) damped.coeffRef(k, k) += mu;
      if (!pattern_ready) {
        ldlt.analyzePattern(damped);
        pattern_ready = true;
      }
      ldlt.factorize(damped);
      if (ldlt.info() != Eigen::Success) {
        mu *= 4.0;
        continue;
      }
      const Eigen::VectorXd step = ldlt.solve(-grad);
      GridField trial(u.shape(), 3);
      for (int i = 0; i < n; ++i) {
        const Vec3 delta = step[2 * i] * frames[i][0] + step[2 * i + 1] * frames[i][1];
        trial.set(i, (u.vec3(i) + delta).normalized());
      }
      Residual tr = elliptic_residual(trial);
      const double tcost = cost_of(tr.field);
      if (tcost < cost) {
        u = std::move(trial);
        r = std::move(tr);
        cost = tcost;
        mu = std::max(mu_floor, mu / 3.0);
        accepted = true;
      } else {
        mu *= 4.0;
      }
    }
    res.iterations = it;
    res.history.push_back({it, functional_F(u), r.linf});
    if (!accepted) break;
  }
  res.converged = r.linf <= config.residual_target;
  return res;
}

}  // namespace

EllipticResult solve_elliptic(const GridField& u_init, const EllipticConfig& config) {
  require_unit(u_init, "solve_elliptic");
  config.validate(u_init.shape().grid1d());
  GridField u = u_init;
  for (int i = 0; i < u.nodes(); ++i) u.set(i, u.vec3(i).normalized());
  return config.mode == Mode::gradient_flow ? run_gradient_flow(u, config)
                                            : run_residual_descent(u, config);
}

void write_history_csv(std::ostream& os, std::span<const HistoryRow> history) {
  os << "iter,F,residual_linf\n";
  for (const auto& h : history) os << fmt::format("{},{:.17g},{:.17g}\n", h.iter, h.F, h.residual_linf);
}

void write_history_csv(const std::string& path, std::span<const HistoryRow> history) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_history_csv(os, history);
}

}  // namespace solitonsim::elliptic

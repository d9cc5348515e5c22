#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "solitonsim/elliptic.hpp"
#include "solitonsim/error.hpp"
#include "solitonsim/initial_data.hpp"
#include "solitonsim/soliton.hpp"

using namespace solitonsim;
using namespace solitonsim::elliptic;
namespace id = solitonsim::initial_data;
using grid::Grid1D;
using grid::GridField;

namespace {
const double kPi = std::numbers::pi;
}

TEST_CASE("functional_F examples") {
  const Grid1D g{128};
  CHECK(functional_F(id::pole(g)) == doctest::Approx(-2 * kPi).epsilon(1e-15));
  GridField eq(g, 3);
  for (int i = 0; i < g.n; ++i) eq.set(i, Vec3(1, 0, 0));
  CHECK(functional_F(eq) == 0.0);

  // Closed form on the latitude family, second order in h.
  double prev = 0.0;
  for (int n : {64, 128, 256}) {
    const double err = std::abs(functional_F(id::latitude(Grid1D{n}, 2, -0.25)) - 17 * kPi / 4);
    CHECK(oracle::latitude_F(2, -0.25) == doctest::Approx(17 * kPi / 4).epsilon(1e-15));
    if (prev > 0.0) CHECK(oracle::order(prev, err) == doctest::Approx(2.0).epsilon(0.02));
    prev = err;
  }
}

TEST_CASE("elliptic_residual examples") {
  const Grid1D g{128};
  CHECK(elliptic_residual(id::pole(g)).linf == 0.0);

  const auto eq = elliptic_residual(id::latitude(g, 1, 0.0));
  CHECK(eq.linf == doctest::Approx(1.0).epsilon(1e-14));
  // Round-off of Δ_h on unit data scales like 1/h².
  for (int i = 0; i < g.n; ++i) CHECK((eq.field.vec3(i) - Vec3(0, 0, 1)).norm() <= 1e-12);

  double prev = 0.0;
  for (int n : {64, 128, 256}) {
    const double r = elliptic_residual(id::latitude(Grid1D{n}, 2, -0.25)).linf;
    if (prev > 0.0) CHECK(oracle::order(prev, r) == doctest::Approx(2.0).epsilon(0.02));
    prev = r;
  }
}

TEST_CASE("tension is tangent and matches the Schrödinger residual norm") {
  const Grid1D g{96};
  const GridField u = id::perturb(id::latitude(g, 2, -0.25), 0.1, 4);
  const GridField t = tension(u);
  for (int i = 0; i < g.n; ++i) CHECK(std::abs(t.vec3(i).dot(u.vec3(i))) <= 1e-12);
  const double ell = grid::l2_norm(elliptic_residual(u).field);
  CHECK(std::abs(ell - soliton::schrodinger_residual(u).l2) <= 1e-12);
}

TEST_CASE("solve_elliptic: pole is already converged") {
  const Grid1D g{64};
  EllipticConfig c;
  const auto r = solve_elliptic(id::pole(g), c);
  CHECK(r.converged);
  CHECK(r.iterations == 0);
  c.mode = Mode::gradient_flow;
  c.flow_dt = 0.2 * g.spacing() * g.spacing();
  CHECK(solve_elliptic(id::pole(g), c).iterations == 0);
}

TEST_CASE("solve_elliptic: residual descent finds the discrete latitude") {
  const Grid1D g{512};
  EllipticConfig c;
  c.mode = Mode::residual_descent;
  const auto r = solve_elliptic(id::perturb(id::latitude(g, 2, -0.25), 0.01, 7), c);
  REQUIRE(r.converged);
  CHECK(elliptic_residual(r.u).linf <= 1e-8);
  // The discrete solution sits at cosθ_h = -1/κ_h with κ_h the stencil symbol of mode 2.
  const double kappa = oracle::symbol(2 * g.spacing(), g.spacing());
  for (int i = 0; i < g.n; ++i) CHECK(std::abs(r.u(i, 2) + 1.0 / kappa) <= 1e-8);
  CHECK(r.history.front().iter == 0);
  CHECK(r.history.back().residual_linf <= 1e-8);
}

TEST_CASE("solve_elliptic: gradient flow from near the pole reaches the minimizer") {
  const Grid1D g{64};
  EllipticConfig c;
  c.mode = Mode::gradient_flow;
  c.flow_dt = 0.25 * g.spacing() * g.spacing();
  c.residual_target = 1e-10;
  const auto r = solve_elliptic(id::perturb(id::pole(g), 0.05, 3), c);
  REQUIRE(r.converged);
  CHECK(std::abs(functional_F(r.u) + 2 * kPi) <= 1e-6);
  for (int i = 0; i < g.n; ++i) CHECK(r.u(i, 2) >= 1.0 - 1e-9);
  // A descent flow: F never increases along the history.
  for (size_t k = 1; k < r.history.size(); ++k) {
    CHECK(r.history[k].F <= r.history[k - 1].F + 1e-14);
  }
}

TEST_CASE("solve_elliptic: iteration cap returns a flagged best iterate") {
  const Grid1D g{64};
  EllipticConfig c;
  c.mode = Mode::gradient_flow;
  c.flow_dt = 0.25 * g.spacing() * g.spacing();
  c.max_iters = 5;
  const auto r = solve_elliptic(id::perturb(id::pole(g), 0.2, 3), c);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 5);
}

TEST_CASE("elliptic config validation and history csv") {
  const Grid1D g{64};
  EllipticConfig c;
  c.mode = Mode::gradient_flow;
  c.flow_dt = 0.3 * g.spacing() * g.spacing();
  CHECK_THROWS_AS(c.validate(g), ValidationError);
  CHECK_THROWS_AS(mode_from_string("newton"), ValidationError);
  std::ostringstream os;
  const std::vector<HistoryRow> rows{{0, 1.5, 0.25}};
  write_history_csv(os, rows);
  CHECK(os.str() == "iter,F,residual_linf\n0,1.5,0.25\n");
}

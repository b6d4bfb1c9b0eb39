#include <doctest.h>

#include <cmath>
#include <vector>

#include "jumpex/error.hpp"
#include "jumpex/hopflax.hpp"

using namespace jumpex;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected jumpex::Error");
  return ErrorKind::InvalidArgument;
}

// Independent oracle: the sup over a fine v grid of x v - (1/v - 1), v >= 1.
double tasep_g_from_dual(double x) {
  double best = -1e300;
  for (double v = 1.0; v <= 200.0; v += 1e-4) best = std::max(best, x * v - (1.0 / v - 1.0));
  return best;
}

double riemann_13_exact(double x) {
  return x <= -1.0 / 9.0 ? tasep_g()(x).value : 3.0 * x + 2.0 / 3.0;
}

}  // namespace

TEST_CASE("grids") {
  const auto grid = arithmetic_grid(-1.5, 0.1, 0.0);
  REQUIRE(grid.size() == 16);
  CHECK(grid[1] == -1.4);
  CHECK(grid[11] == -0.4);
  CHECK(grid.back() == 0.0);
  CHECK(kind_of([] { arithmetic_grid(0.0, -1.0, 1.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("analytic tasep g") {
  const auto g = tasep_g();
  CHECK(g(0.0).value == 1.0);
  CHECK(g(-0.25).value == 0.0);
  CHECK(g(-1.0).value == -1.0);
  CHECK(g(-1.0).value == doctest::Approx(tasep_g_from_dual(-1.0)).epsilon(1e-9));
  for (double x : {-0.81, -0.5, -0.1, -1.3, -2.0})
    CHECK(g(x).value == doctest::Approx(tasep_g_from_dual(x)).epsilon(1e-6));
  CHECK(g(-1.5).value == -1.5);
  CHECK(g(0.1).infinite);
  CHECK(g(1e-300).infinite);
}

TEST_CASE("tabulated tables") {
  const auto lin = ConvexFnTable::tabulated({-1.0, -0.5, 0.0}, {-1.0, -0.5, 0.0});
  CHECK(lin(-0.25).value == -0.25);
  CHECK(lin(-3.0).value == -3.0);
  CHECK(lin(0.5).infinite);
  CHECK(kind_of([] { ConvexFnTable::tabulated({-1.0, -0.5, 0.0}, {-1.0, 0.0, 0.2}); }) ==
        ErrorKind::InvalidArgument);  // not convex
  CHECK(kind_of([] { ConvexFnTable::tabulated({-1.0, 0.0}, {-0.5, 0.0}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { ConvexFnTable::tabulated({-1.0, -0.5}, {-1.0, -0.5}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("conjugate of the analytic tasep g") {
  const auto v = arithmetic_grid(1.0, 0.01, 4.0);
  const auto star = convex_conjugate(tasep_g(), v);
  double worst = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    REQUIRE(star.value[k].is_finite());
    worst = std::max(worst, std::abs(star.value[k].value - (1.0 / v[k] - 1.0)));
  }
  CHECK(worst <= 1e-4);
  // Convex in v.
  for (std::size_t k = 1; k + 1 < v.size(); ++k)
    CHECK(star.value[k - 1].value + star.value[k + 1].value - 2.0 * star.value[k].value >= -1e-12);
  const auto below = convex_conjugate(tasep_g(), {0.5, 0.999});
  CHECK(below.value[0].infinite);
  CHECK(below.value[1].infinite);
}

TEST_CASE("conjugate of the slope-one table") {
  const auto lin = ConvexFnTable::tabulated({-2.0, -1.0, 0.0}, {-2.0, -1.0, 0.0});
  const auto star = convex_conjugate(lin, {1.0, 2.0});
  CHECK(star.value[0].value == 0.0);
  CHECK(star.value[1].value == 0.0);  // sup_x x (2 - 1) at x = 0
}

TEST_CASE("double conjugation") {
  // g(x) = 1 + 2x + x^2 / 2 on [-1, 0]: slopes in [1, 2].
  const double h = 1.0 / 64.0, dv = 1.0 / 128.0;
  const auto x = arithmetic_grid(-1.0, h, 0.0);
  std::vector<double> values;
  for (double xi : x) values.push_back(1.0 + 2.0 * xi + xi * xi / 2.0);
  const auto g = ConvexFnTable::tabulated(x, values);
  const auto star = convex_conjugate(g, arithmetic_grid(1.0, dv, 2.5));
  const auto back = biconjugate(star, x);
  // Brute force over both grids: the v grid misses a node's subgradient by at
  // most dv / 2, costing at most h dv / 2 at that node.
  const double bound = h * dv / 2.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    CHECK(back[k] <= values[k] + 1e-12);
    CHECK(values[k] - back[k] <= 2.0 * bound);
  }
}

TEST_CASE("tasep flux and current") {
  const auto g = tasep_g();
  const auto v = arithmetic_grid(1.0, 0.05, 4.0);
  const auto flux = flux_from_g(g, v);
  CHECK(flux.f[0].value == 0.0);
  CHECK(!std::signbit(flux.f[0].value));
  for (std::size_t k = 0; k < v.size(); ++k) {
    CHECK(flux.f[k].value == doctest::Approx(1.0 - 1.0 / v[k]).epsilon(1e-4));
    CHECK(flux.f[k].value <= 1.0);  // f <= B1
    if (k > 0) CHECK(flux.f[k].value >= flux.f[k - 1].value);
  }

  std::vector<double> v_of_rho;
  for (double rho : arithmetic_grid(0.001, 0.001, 1.0)) v_of_rho.push_back(1.0 / rho);
  const auto curve = flux_from_g(g, v_of_rho);
  std::size_t arg = 0;
  for (std::size_t k = 0; k < v_of_rho.size(); ++k) {
    CHECK(curve.current[k].value == doctest::Approx(curve.rho[k] * (1.0 - curve.rho[k])).epsilon(1e-4));
    if (curve.current[arg].value < curve.current[k].value) arg = k;
  }
  CHECK(std::abs(curve.rho[arg] - 0.5) <= 1e-3);
  CHECK(std::abs(curve.current[arg].value - 0.25) <= 1e-3);
}

TEST_CASE("macro profiles") {
  const auto step = MacroProfile::step();
  CHECK(step(-2.0).value == -2.0);
  CHECK(step(0.0).value == 0.0);
  CHECK(step(0.5).infinite);
  const auto r = MacroProfile::riemann(1.0, 3.0);
  CHECK(r(-1.0).value == -1.0);
  CHECK(r(1.0).value == 3.0);
  CHECK(r.shifted(0.5)(1.5).value == 3.0);
  CHECK(MacroProfile::parse("linear:2")(1.5).value == 3.0);
  CHECK(MacroProfile::parse("riemann:1:3")(2.0).value == 6.0);
  CHECK(kind_of([] { MacroProfile::parse("linear:0.5"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { MacroProfile::parse("ramp"); }) == ErrorKind::Config);
  CHECK(kind_of([] { MacroProfile::parse("linear:2x"); }) == ErrorKind::Config);
  CHECK(kind_of([] { MacroProfile::piecewise({0.0, 1.0}, {0.0, 0.5}, 1.0, 1.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("hopf-lax spot values") {
  const auto g = tasep_g();
  const auto linear = MacroProfile::linear(2.0);
  const auto r = hopf_lax_solve(linear, g, 0.0, 1.0);
  CHECK(std::abs(r.value.value - 0.5) <= 1e-4);
  CHECK(r.argmin == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(r.interior);

  // Constant shift: u0 + c gives u + c with the same minimizer.
  const auto lifted = MacroProfile::piecewise({0.0}, {7.0}, 2.0, 2.0);
  const auto rl = hopf_lax_solve(lifted, g, 0.0, 1.0);
  CHECK(rl.value.value == doctest::Approx(7.5).epsilon(1e-12));
  CHECK(rl.argmin == doctest::Approx(r.argmin).epsilon(1e-9));

  // Doubling y_max leaves the value unchanged.
  const auto wide = hopf_lax_solve(linear, g, 0.0, 1.0, 2.0 * r.y_max);
  CHECK(wide.value.value == doctest::Approx(r.value.value).epsilon(1e-12));

  CHECK(kind_of([&] { hopf_lax_solve(linear, g, 0.0, 0.0); }) == ErrorKind::InvalidTime);
  CHECK(kind_of([&] { hopf_lax_solve(linear, g, 0.0, 1.0, 0.1); }) == ErrorKind::TruncationTooSmall);
}

TEST_CASE("hopf-lax step and riemann data") {
  const auto g = tasep_g();
  const auto grid = arithmetic_grid(-1.5, 0.1, 0.0);
  for (double t : {1.0, 2.0}) {
    const auto out = solve_profile(MacroProfile::step(), g, grid, t);
    for (std::size_t k = 0; k < grid.size(); ++k)
      CHECK(out[k].value.value == doctest::Approx(t * g(grid[k] / t).value).epsilon(1e-12));
  }
  CHECK(hopf_lax_solve(MacroProfile::step(), g, 0.2, 1.0).value.infinite);

  const auto wide = arithmetic_grid(-1.5, 0.05, 1.0);
  const auto out = solve_profile(MacroProfile::riemann(1.0, 3.0), g, wide, 1.0);
  for (std::size_t k = 0; k < wide.size(); ++k) {
    CHECK(std::abs(out[k].value.value - riemann_13_exact(wide[k])) <= 1e-9);
    if (k > 0) CHECK(out[k].value.value >= out[k - 1].value.value);
  }

  // Tabulated g on a 0.1 grid still lands close.
  const auto coarse = arithmetic_grid(-1.5, 0.1, 0.0);
  std::vector<double> vals;
  for (double x : coarse) vals.push_back(g(x).value);
  const auto table = ConvexFnTable::tabulated(coarse, vals);
  for (double x : {-1.2, -0.5, -0.05, 0.3})
    CHECK(std::abs(hopf_lax_solve(MacroProfile::riemann(1.0, 3.0), table, x, 1.0).value.value - riemann_13_exact(x)) <=
          0.01);
}

TEST_CASE("hopf-lax invariants") {
  const auto g = tasep_g();
  const auto u0 = MacroProfile::piecewise({-1.0, 0.0, 0.5}, {-2.0, 0.0, 0.6}, 1.5, 2.5);
  const auto grid = arithmetic_grid(-1.5, 0.05, 1.0);

  // Translation equivariance.
  const double a = 0.25;
  const auto moved = u0.shifted(a);
  for (double x : grid)
    CHECK(hopf_lax_solve(moved, g, x + a, 0.7).value.value ==
          doctest::Approx(hopf_lax_solve(u0, g, x, 0.7).value.value).epsilon(1e-9));

  // u(x, t) <= u0(x) + t g(0), monotone in x.
  const auto out = solve_profile(u0, g, grid, 0.7);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(out[k].value.value <= u0(grid[k]).value + 0.7 * 1.0 + 1e-12);
    if (k > 0) CHECK(out[k].value.value >= out[k - 1].value.value);
  }

  // Small t: within one grid cell of u0.
  const double cell = 0.05;
  const auto early = solve_profile(u0, g, grid, 1e-4);
  for (std::size_t k = 0; k < grid.size(); ++k) CHECK(std::abs(early[k].value.value - u0(grid[k]).value) <= cell);
}

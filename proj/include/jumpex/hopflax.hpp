#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace jumpex {

/// A real number or +inf. +inf is a flag, never a large double, so it can be
/// excluded from minima and conjugates explicitly.
struct ExtendedReal {
  double value = 0.0;
  bool infinite = false;

  static ExtendedReal plus_infinity() { return {0.0, true}; }
  bool is_finite() const noexcept { return !infinite; }
  friend bool operator<(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.infinite || b.infinite) return !a.infinite && b.infinite;
    return a.value < b.value;
  }
};

/// Convex, nondecreasing g on (-inf, 0] with slopes >= 1, and g = +inf on
/// x > 0. Left of the first grid point g continues linearly with the
/// leftmost slope.
class ConvexFnTable {
 public:
  /// Piecewise-linear interpolation of (grid, values). The grid must be
  /// strictly increasing and end at 0. Throws Error(InvalidArgument) when
  /// the values are not convex, nondecreasing with slopes >= 1 (to 1e-9).
  static ConvexFnTable tabulated(std::vector<double> grid, std::vector<double> values,
                                 std::string tag = "tabulated");

  /// Closed-form g on [grid.front(), 0], tabulated on `grid` for display
  /// and for conjugation, continued left with `left_slope`.
  static ConvexFnTable analytic(std::function<double(double)> fn, std::vector<double> grid, double left_slope,
                                std::string tag);

  ExtendedReal operator()(double x) const;
  /// Finite value at x <= 0.
  double finite_at(double x) const;

  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double left_slope() const noexcept { return left_slope_; }
  bool is_analytic() const noexcept { return static_cast<bool>(fn_); }
  const std::string& tag() const noexcept { return tag_; }

 private:
  std::vector<double> grid_;
  std::vector<double> values_;
  double left_slope_ = 1.0;
  std::function<double(double)> fn_;
  std::string tag_;
};

/// g(x) = 1 - 2 sqrt(-x) on [-1, 0], g(x) = x for x < -1.
ConvexFnTable tasep_g();

struct ConjugateTable {
  std::vector<double> v;
  std::vector<ExtendedReal> value;   // g*(v)
  std::vector<double> maximizer;     // x attaining the sup (NaN when infinite)
  /// Spacing of the x grid the sup was taken over.
  double resolution = 0.0;
};

/// g*(v) = sup_x { x v - g(x) }. Tabulated g: exact over the piecewise-linear
/// interpolant (the sup sits at a node). Analytic g: regridded with dyadic
/// spacing `analytic_spacing`. The linear left extension is handled in closed
/// form: g*(v) = +inf when v < left slope.
ConjugateTable convex_conjugate(const ConvexFnTable& g, const std::vector<double>& v_grid,
                                double analytic_spacing = 1.0 / 4096.0);

/// Brute-force g**(x) = sup_v { x v - g*(v) } over the finite entries.
std::vector<double> biconjugate(const ConjugateTable& conjugate, const std::vector<double>& x_grid);

struct FluxTable {
  std::vector<double> v;
  std::vector<ExtendedReal> f;     // f(v) = -g*(v); +inf stays flagged
  std::vector<double> rho;         // 1 / v
  std::vector<ExtendedReal> current;  // rho * f(1 / rho)
};

FluxTable flux_from_g(const ConvexFnTable& g, const std::vector<double>& v_grid);

/// Piecewise-linear, nondecreasing u0 with slopes >= 1. Beyond the last knot
/// u0 continues with `right_slope`, or is +inf when right_infinite.
class MacroProfile {
 public:
  static MacroProfile linear(double v);
  /// y for y <= 0, +inf for y > 0.
  static MacroProfile step();
  /// Slope `left` on y <= 0, `right` on y > 0, u0(0) = 0.
  static MacroProfile riemann(double left, double right);
  static MacroProfile piecewise(std::vector<double> knots, std::vector<double> values, double left_slope,
                                double right_slope, bool right_infinite = false);
  /// Parses "linear:v", "step", "riemann:a:b".
  static MacroProfile parse(const std::string& text);

  ExtendedReal operator()(double y) const;
  /// u0(. - a): the same profile moved right by a.
  MacroProfile shifted(double a) const;

  const std::vector<double>& knots() const noexcept { return knots_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double left_slope() const noexcept { return left_slope_; }
  double right_slope() const noexcept { return right_slope_; }
  bool right_infinite() const noexcept { return right_infinite_; }
  const std::string& tag() const noexcept { return tag_; }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  double left_slope_ = 1.0;
  double right_slope_ = 1.0;
  bool right_infinite_ = false;
  std::string tag_;
};

struct HopfLaxResult {
  ExtendedReal value;
  double argmin = 0.0;
  double y_max = 0.0;
  /// Minimizer strictly inside [x, y_max).
  bool interior = true;
};

/// u(x, t) = inf_{x <= y <= y_max} { u0(y) + t g((x - y) / t) }.
///
/// Candidates are a uniform y grid plus every kink of u0 and of g (mapped to
/// y = x - t z); between consecutive candidates the objective is convex, so
/// the cells next to the best candidate are refined by golden section.
/// Default y_max = x + (2 + g(0)) t. Throws Error(InvalidTime) for t <= 0
/// and Error(TruncationTooSmall) when the minimizer is y_max.
HopfLaxResult hopf_lax_solve(const MacroProfile& u0, const ConvexFnTable& g, double x, double t,
                             std::optional<double> y_max = std::nullopt);

/// hopf_lax_solve at every x of the grid.
std::vector<HopfLaxResult> solve_profile(const MacroProfile& u0, const ConvexFnTable& g,
                                         const std::vector<double>& x_grid, double t);

/// Inclusive arithmetic grid lo, lo + step, ..., hi; points are lo + k step
/// rounded to 12 decimals so that 0.1-grids hit their decimal values.
std::vector<double> arithmetic_grid(double lo, double step, double hi);

}  // namespace jumpex

#include "jumpex/hopflax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "jumpex/error.hpp"

namespace jumpex {

namespace {

constexpr double kSlopeTolerance = 1e-9;

void require_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "empty grid");
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw Error(ErrorKind::InvalidArgument, "grid must be strictly increasing");
}

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  if (it == xs.end()) return ys.back();
  const auto k = static_cast<std::size_t>(it - xs.begin());
  if (k == 0) return ys.front();
  const double w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
  return ys[k - 1] + w * (ys[k] - ys[k - 1]);
}

ExtendedReal add(ExtendedReal a, double b) { return a.infinite ? a : ExtendedReal{a.value + b}; }

}  // namespace

ConvexFnTable ConvexFnTable::tabulated(std::vector<double> grid, std::vector<double> values, std::string tag) {
  require_grid(grid);
  if (grid.size() != values.size()) throw Error(ErrorKind::InvalidArgument, "grid and values differ in length");
  if (grid.size() < 2) throw Error(ErrorKind::InvalidArgument, "a tabulated g needs at least two points");
  if (std::abs(grid.back()) > 1e-12) throw Error(ErrorKind::InvalidArgument, "tabulated g must end at x = 0");
  grid.back() = 0.0;
  double previous = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double slope = (values[k + 1] - values[k]) / (grid[k + 1] - grid[k]);
    if (!std::isfinite(values[k]) || !std::isfinite(values[k + 1]))
      throw Error(ErrorKind::InvalidArgument, "tabulated g must be finite on its grid");
    if (slope < 1.0 - kSlopeTolerance)
      throw Error(ErrorKind::InvalidArgument, "tabulated g has slope below 1 at x = " + std::to_string(grid[k]));
    if (slope < previous - kSlopeTolerance)
      throw Error(ErrorKind::InvalidArgument, "tabulated g is not convex at x = " + std::to_string(grid[k]));
    previous = slope;
  }
  ConvexFnTable g;
  g.left_slope_ = std::max(1.0, (values[1] - values[0]) / (grid[1] - grid[0]));
  g.grid_ = std::move(grid);
  g.values_ = std::move(values);
  g.tag_ = std::move(tag);
  return g;
}

ConvexFnTable ConvexFnTable::analytic(std::function<double(double)> fn, std::vector<double> grid, double left_slope,
                                      std::string tag) {
  require_grid(grid);
  if (grid.back() != 0.0) throw Error(ErrorKind::InvalidArgument, "analytic g grid must end at x = 0");
  if (left_slope < 1.0) throw Error(ErrorKind::InvalidArgument, "left slope must be at least 1");
  ConvexFnTable g;
  for (double x : grid) g.values_.push_back(fn(x));
  g.grid_ = std::move(grid);
  g.left_slope_ = left_slope;
  g.fn_ = std::move(fn);
  g.tag_ = std::move(tag);
  return g;
}

double ConvexFnTable::finite_at(double x) const {
  const double front = grid_.front();
  if (x < front) return values_.front() + left_slope_ * (x - front);
  if (fn_) return fn_(x);
  return interpolate(grid_, values_, x);
}

ExtendedReal ConvexFnTable::operator()(double x) const {
  if (x > 0.0) return ExtendedReal::plus_infinity();
  return {finite_at(x)};
}

ConvexFnTable tasep_g() {
  return ConvexFnTable::analytic([](double x) { return 1.0 - 2.0 * std::sqrt(-x); }, arithmetic_grid(-1.0, 0.0625, 0.0),
                                 1.0, "tasep");
}

ConjugateTable convex_conjugate(const ConvexFnTable& g, const std::vector<double>& v_grid, double analytic_spacing) {
  std::vector<double> xs, gs;
  if (g.is_analytic()) {
    const double front = g.grid().front();
    const auto steps = static_cast<std::int64_t>(std::floor(-front / analytic_spacing + 1e-9));
    for (std::int64_t k = steps; k >= 0; --k) xs.push_back(-static_cast<double>(k) * analytic_spacing);
    if (xs.front() > front) xs.insert(xs.begin(), front);
    for (double x : xs) gs.push_back(g.finite_at(x));
  } else {
    xs = g.grid();
    gs = g.values();
  }

  ConjugateTable out;
  out.v = v_grid;
  for (std::size_t k = 1; k < xs.size(); ++k) out.resolution = std::max(out.resolution, xs[k] - xs[k - 1]);
  for (double v : v_grid) {
    // Left of the grid x v - g(x) has slope v - left_slope in x.
    if (v < g.left_slope()) {
      out.value.push_back(ExtendedReal::plus_infinity());
      out.maximizer.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    double best = -std::numeric_limits<double>::infinity();
    double at = xs.front();
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const double value = xs[k] * v - gs[k];
      if (value > best) best = value, at = xs[k];
    }
    out.value.push_back({best});
    out.maximizer.push_back(at);
  }
  return out;
}

std::vector<double> biconjugate(const ConjugateTable& conjugate, const std::vector<double>& x_grid) {
  std::vector<double> out;
  out.reserve(x_grid.size());
  for (double x : x_grid) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < conjugate.v.size(); ++k)
      if (conjugate.value[k].is_finite()) best = std::max(best, x * conjugate.v[k] - conjugate.value[k].value);
    out.push_back(best);
  }
  return out;
}

FluxTable flux_from_g(const ConvexFnTable& g, const std::vector<double>& v_grid) {
  for (double v : v_grid)
    if (!(v > 0.0)) throw Error(ErrorKind::InvalidArgument, "flux needs v > 0");
  const auto conjugate = convex_conjugate(g, v_grid);
  FluxTable out;
  out.v = v_grid;
  for (std::size_t k = 0; k < v_grid.size(); ++k) {
    const ExtendedReal star = conjugate.value[k];
    // +0.0 turns -0.0 into 0.0 so f(1) prints as 0.
    const ExtendedReal f = star.infinite ? star : ExtendedReal{-star.value + 0.0};
    out.f.push_back(f);
    out.rho.push_back(1.0 / v_grid[k]);
    out.current.push_back(f.infinite ? f : ExtendedReal{f.value / v_grid[k]});
  }
  return out;
}

MacroProfile MacroProfile::piecewise(std::vector<double> knots, std::vector<double> values, double left_slope,
                                     double right_slope, bool right_infinite) {
  require_grid(knots);
  if (knots.size() != values.size()) throw Error(ErrorKind::InvalidArgument, "knots and values differ in length");
  if (left_slope < 1.0 || (!right_infinite && right_slope < 1.0))
    throw Error(ErrorKind::InvalidArgument, "profile slopes must be at least 1");
  for (std::size_t k = 0; k + 1 < knots.size(); ++k)
    if ((values[k + 1] - values[k]) / (knots[k + 1] - knots[k]) < 1.0 - 1e-12)
      throw Error(ErrorKind::InvalidArgument, "profile slope below 1 after y = " + std::to_string(knots[k]));
  MacroProfile p;
  p.knots_ = std::move(knots);
  p.values_ = std::move(values);
  p.left_slope_ = left_slope;
  p.right_slope_ = right_slope;
  p.right_infinite_ = right_infinite;
  p.tag_ = "piecewise";
  return p;
}

MacroProfile MacroProfile::linear(double v) {
  if (v < 1.0) throw Error(ErrorKind::InvalidArgument, "linear profile needs slope v >= 1");
  auto p = piecewise({0.0}, {0.0}, v, v);
  std::ostringstream tag;
  tag << "linear:" << v;
  p.tag_ = tag.str();
  return p;
}

MacroProfile MacroProfile::step() {
  auto p = piecewise({0.0}, {0.0}, 1.0, 1.0, true);
  p.tag_ = "step";
  return p;
}

MacroProfile MacroProfile::riemann(double left, double right) {
  auto p = piecewise({0.0}, {0.0}, left, right);
  std::ostringstream tag;
  tag << "riemann:" << left << ":" << right;
  p.tag_ = tag.str();
  return p;
}

MacroProfile MacroProfile::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  auto number = [&](std::size_t k) {
    try {
      std::size_t used = 0;
      const double v = std::stod(parts.at(k), &used);
      if (used != parts[k].size()) throw std::invalid_argument(parts[k]);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config, "bad number in profile '" + text + "'");
    }
  };
  if (parts.size() == 1 && parts[0] == "step") return step();
  if (parts.size() == 2 && parts[0] == "linear") return linear(number(1));
  if (parts.size() == 3 && parts[0] == "riemann") return riemann(number(1), number(2));
  throw Error(ErrorKind::Config, "unknown profile '" + text + "' (expected step, linear:v or riemann:a:b)");
}

ExtendedReal MacroProfile::operator()(double y) const {
  if (y < knots_.front()) return {values_.front() + left_slope_ * (y - knots_.front())};
  if (y > knots_.back()) {
    if (right_infinite_) return ExtendedReal::plus_infinity();
    return {values_.back() + right_slope_ * (y - knots_.back())};
  }
  return {interpolate(knots_, values_, y)};
}

MacroProfile MacroProfile::shifted(double a) const {
  MacroProfile p = *this;
  for (double& k : p.knots_) k += a;
  return p;
}

HopfLaxResult hopf_lax_solve(const MacroProfile& u0, const ConvexFnTable& g, double x, double t,
                             std::optional<double> y_max) {
  if (!(t > 0.0)) throw Error(ErrorKind::InvalidTime, "invalid time: t must be > 0");
  const double upper = y_max.value_or(x + (2.0 + g.finite_at(0.0)) * t);
  if (!(upper > x)) throw Error(ErrorKind::InvalidArgument, "y_max must exceed x");

  auto objective = [&](double y) { return add(u0(y), t * g.finite_at((x - y) / t)); };

  constexpr int kUniform = 4096;
  std::vector<double> ys;
  ys.reserve(kUniform + u0.knots().size() + g.grid().size() + 2);
  for (int k = 0; k <= kUniform; ++k) ys.push_back(x + (upper - x) * k / kUniform);
  ys.back() = upper;
  for (double y : u0.knots())
    if (y > x && y < upper) ys.push_back(y);
  for (double z : g.grid()) {
    const double y = x - t * z;
    if (y > x && y < upper) ys.push_back(y);
  }
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

  std::size_t best = 0;
  ExtendedReal best_value = objective(ys[0]);
  for (std::size_t k = 1; k < ys.size(); ++k) {
    const ExtendedReal value = objective(ys[k]);
    if (value < best_value) best_value = value, best = k;
  }
  HopfLaxResult out{best_value, ys[best], upper, best + 1 < ys.size()};
  if (!out.interior)
    throw Error(ErrorKind::TruncationTooSmall, "truncation too small: minimizer at y_max = " + std::to_string(upper));
  if (best_value.infinite) return out;

  // Golden section on the two cells around the best candidate.
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  for (std::size_t cell = best == 0 ? 0 : best - 1; cell <= best && cell + 1 < ys.size(); ++cell) {
    double a = ys[cell], b = ys[cell + 1];
    double c = b - ratio * (b - a), d = a + ratio * (b - a);
    ExtendedReal fc = objective(c), fd = objective(d);
    for (int iter = 0; iter < 100 && b - a > 1e-15 * (1.0 + std::abs(a)); ++iter) {
      if (fc < fd || (!(fd < fc) && fc.infinite)) {
        b = d, d = c, fd = fc;
        c = b - ratio * (b - a);
        fc = objective(c);
      } else {
        a = c, c = d, fc = fd;
        d = a + ratio * (b - a);
        fd = objective(d);
      }
    }
    const double y = fc < fd ? c : d;
    const ExtendedReal value = objective(y);
    if (value < out.value) out.value = value, out.argmin = y;
  }
  return out;
}

std::vector<HopfLaxResult> solve_profile(const MacroProfile& u0, const ConvexFnTable& g,
                                         const std::vector<double>& x_grid, double t) {
  std::vector<HopfLaxResult> out;
  out.reserve(x_grid.size());
  for (double x : x_grid) out.push_back(hopf_lax_solve(u0, g, x, t));
  return out;
}

std::vector<double> arithmetic_grid(double lo, double step, double hi) {
  if (!(step > 0.0) || hi < lo) throw Error(ErrorKind::InvalidArgument, "bad grid range");
  const auto count = static_cast<std::int64_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) grid.push_back(std::round((lo + static_cast<double>(k) * step) * 1e12) / 1e12);
  return grid;
}

}  // namespace jumpex

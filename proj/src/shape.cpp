#include "jumpex/shape.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jumpex/error.hpp"
#include "jumpex/evolve.hpp"
#include "jumpex/parallel.hpp"

namespace jumpex {

namespace {

constexpr double kRoundoff = 1e-12;

void require_sorted(const std::vector<double>& v, const char* what) {
  if (v.empty()) throw Error(ErrorKind::InvalidArgument, std::string(what) + " is empty");
  for (std::size_t k = 1; k < v.size(); ++k)
    if (!(v[k] > v[k - 1])) throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be strictly increasing");
}

std::optional<std::size_t> lookup(const std::vector<double>& grid, double x) {
  const auto it = std::lower_bound(grid.begin(), grid.end(), x - 1e-9);
  if (it != grid.end() && std::abs(*it - x) <= 1e-9) return static_cast<std::size_t>(it - grid.begin());
  return std::nullopt;
}

void note(PropertyCheck& check, double miss, double tol) {
  ++check.checked;
  if (check.checked == 1 || miss > check.worst) check.worst = miss;
  if (miss > tol) check.passed = false;
}

}  // namespace

Index grid_index(std::int64_t n, double x) {
  return static_cast<Index>(std::floor(static_cast<double>(n) * x + 1e-9));
}

Summary summarize(std::vector<double> values) {
  if (values.empty()) return {};
  std::sort(values.begin(), values.end());
  const double count = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / count;
  double squares = 0.0;
  for (double v : values) squares += (v - mean) * (v - mean);
  const std::size_t mid = values.size() / 2;
  const double median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  const double se = values.size() > 1 ? std::sqrt(squares / (count - 1.0) / count) : 0.0;
  return {mean, se, median};
}

StepSample simulate_xi_step(const RateTable& rates, std::int64_t n, const std::vector<double>& t_macro,
                            const std::vector<double>& x_grid, StreamSeed seed) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
  require_sorted(x_grid, "x grid");
  if (x_grid.back() > 0.0) throw Error(ErrorKind::InvalidArgument, "step grid must lie in x <= 0");
  for (std::size_t q = 0; q < t_macro.size(); ++q)
    if (t_macro[q] < 0.0 || (q > 0 && t_macro[q] < t_macro[q - 1]))
      throw Error(ErrorKind::InvalidTime, "invalid time: t_macro must be sorted and >= 0");

  const double t_max = t_macro.empty() ? 0.0 : t_macro.back();
  const double horizon = static_cast<double>(n) * t_max;
  const Index depth = -grid_index(n, x_grid.front()) + static_cast<Index>(std::ceil(rates.b0() * horizon));

  StepSample out;
  out.t_macro = t_macro;
  out.window_lo = -depth;
  const Configuration start = step_configuration(depth);
  std::vector<double> queries;
  for (double t : t_macro) queries.push_back(static_cast<double>(n) * t);

  Trajectory run;
  if (horizon > 0.0) {
    const auto bank = ClockBank::generate(rates, -depth, 0, horizon, seed);
    run = evolve(start, bank, horizon, queries);
  } else {
    run.lo = -depth;
    run.snapshots.assign(queries.size(), start.positions());
    run.final_state = start;
  }
  out.epochs = run.epochs_processed;
  out.left_quiet = run.final_state.at(-depth) == Position(-depth);
  if (!out.left_quiet)
    throw Error(ErrorKind::WindowTooSmall, "enlarge window: the leftmost tracked particle moved");

  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::vector<double> row;
    for (double x : x_grid)
      row.push_back(static_cast<double>(run.at(q, grid_index(n, x)).value()) / static_cast<double>(n));
    out.scaled.push_back(std::move(row));
  }
  return out;
}

std::vector<ShapeEstimate> estimate_gamma(const RateTable& rates, std::int64_t n, const std::vector<double>& x_grid,
                                          const std::vector<double>& t_macro, std::size_t replicas,
                                          std::uint64_t master) {
  if (replicas < 2) throw Error(ErrorKind::InvalidArgument, "estimation needs at least two replicas");
  std::vector<StepSample> samples(replicas);
  parallel_for(replicas, [&](std::size_t r) {
    samples[r] = simulate_xi_step(rates, n, t_macro, x_grid, StreamSeed{master, r});
  });

  std::vector<ShapeEstimate> out;
  for (std::size_t q = 0; q < t_macro.size(); ++q) {
    ShapeEstimate est;
    est.x_grid = x_grid;
    est.n = n;
    est.t_macro = t_macro[q];
    est.t_phys = static_cast<double>(n) * t_macro[q];
    est.replicas = replicas;
    est.rates = rates;
    est.window_lo = samples.front().window_lo;
    for (const auto& s : samples) {
      est.left_quiet = est.left_quiet && s.left_quiet;
      est.epochs += s.epochs;
    }
    for (std::size_t k = 0; k < x_grid.size(); ++k) {
      std::vector<double> values;
      for (const auto& s : samples) values.push_back(s.scaled[q][k]);
      const Summary sum = summarize(values);
      est.g_raw.push_back(sum.mean);
      est.stderr_.push_back(sum.stderr_);
      est.median.push_back(sum.median);
    }
    out.push_back(convexify(std::move(est)));
  }
  return out;
}

ShapeEstimate estimate_g(const RateTable& rates, std::int64_t n, const std::vector<double>& x_grid,
                         std::size_t replicas, std::uint64_t master) {
  return estimate_gamma(rates, n, x_grid, {1.0}, replicas, master).front();
}

std::vector<double> convexify_values(const std::vector<double>& x, const std::vector<double>& y,
                                     double* displacement) {
  const std::size_t count = x.size();
  std::vector<double> out = y;
  if (count >= 3) {
    // Lower hull, left to right.
    std::vector<std::size_t> hull;
    for (std::size_t k = 0; k < count; ++k) {
      while (hull.size() >= 2) {
        const std::size_t a = hull[hull.size() - 2], b = hull.back();
        const double cross = (x[b] - x[a]) * (y[k] - y[a]) - (y[b] - y[a]) * (x[k] - x[a]);
        if (cross > 0.0) break;
        hull.pop_back();
      }
      hull.push_back(k);
    }
    for (std::size_t h = 0; h + 1 < hull.size(); ++h) {
      const std::size_t a = hull[h], b = hull[h + 1];
      for (std::size_t k = a + 1; k < b; ++k) out[k] = y[a] + (y[b] - y[a]) * (x[k] - x[a]) / (x[b] - x[a]);
    }
  }
  for (std::size_t k = count; k-- > 1;) out[k - 1] = std::min(out[k - 1], out[k] - (x[k] - x[k - 1]));
  if (displacement) {
    *displacement = 0.0;
    for (std::size_t k = 0; k < count; ++k) *displacement = std::max(*displacement, std::abs(out[k] - y[k]));
  }
  return out;
}

ShapeEstimate convexify(ShapeEstimate raw) {
  raw.g_hat = convexify_values(raw.x_grid, raw.g_raw, &raw.projection_displacement);
  return raw;
}

ConvexFnTable to_convex_table(const ShapeEstimate& est) {
  return ConvexFnTable::tabulated(est.x_grid, est.g_hat, "estimated");
}

bool ShapeReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const PropertyCheck& c) { return c.passed; });
}

const PropertyCheck* ShapeReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

ShapeReport check_shape_properties(const ShapeEstimate& est, double tol, const ShapeEstimate* later,
                                   const ShapeEstimate* doubled) {
  const auto& x = est.x_grid;
  const auto& g = est.g_hat;
  const double t = est.t_macro;
  const double b1 = est.rates.b1();
  const double slack = tol + kRoundoff;

  PropertyCheck envelope{"envelope"}, monotone{"monotone"}, convex{"convex"}, slope{"slope"};
  for (std::size_t k = 0; k < x.size(); ++k) {
    note(envelope, std::max(x[k] - g[k], g[k] - (x[k] + b1 * t)), slack);
    if (k + 1 < x.size()) {
      note(monotone, g[k] - g[k + 1], slack);
      note(slope, 1.0 - (g[k + 1] - g[k]) / (x[k + 1] - x[k]), slack);
    }
    if (k > 0 && k + 1 < x.size()) {
      const double chord = g[k - 1] + (g[k + 1] - g[k - 1]) * (x[k] - x[k - 1]) / (x[k + 1] - x[k - 1]);
      note(convex, g[k] - chord, slack);
    }
  }
  ShapeReport report;
  report.checks = {envelope, monotone, convex, slope};

  if (later) {
    PropertyCheck lipschitz{"lipschitz"};
    const double eps = later->t_macro - t;
    for (std::size_t k = 0; k < x.size(); ++k)
      if (const auto m = lookup(later->x_grid, x[k])) note(lipschitz, later->g_hat[*m] - (g[k] + b1 * eps), slack);
    report.checks.push_back(lipschitz);
  }

  PropertyCheck subadditive{"subadditive"};
  for (std::size_t a = 0; a < x.size(); ++a)
    for (std::size_t b = a; b < x.size(); ++b) {
      if (doubled) {
        if (const auto m = lookup(doubled->x_grid, x[a] + x[b])) note(subadditive, doubled->g_hat[*m] - g[a] - g[b], slack);
      } else if (const auto m = lookup(x, 0.5 * (x[a] + x[b]))) {
        note(subadditive, 2.0 * g[*m] - g[a] - g[b], slack);
      }
    }
  report.checks.push_back(subadditive);
  return report;
}

MicroInitial initialize_from_profile(const MacroProfile& u0, std::int64_t n, Index lo, Index hi) {
  if (hi < lo) throw Error(ErrorKind::InvalidArgument, "empty index window");
  MicroInitial out;
  std::vector<Position> pos;
  pos.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (Index i = lo; i <= hi; ++i) {
    const ExtendedReal u = u0(static_cast<double>(i) / static_cast<double>(n));
    Position p = u.infinite ? Position::plus_infinity()
                            : Position(static_cast<std::int64_t>(std::floor(static_cast<double>(n) * u.value + 1e-9)));
    if (!pos.empty() && p.is_finite() && p <= pos.back()) {
      p = pos.back() + 1;
      ++out.repairs;
    }
    pos.push_back(p);
  }
  out.config = Configuration(lo, std::move(pos));
  return out;
}

ProfileEstimate empirical_profile(const MacroProfile& u0, const RateTable& rates, std::int64_t n,
                                  const std::vector<double>& x_grid, double t_macro, std::size_t replicas,
                                  std::uint64_t master) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
  if (replicas < 1) throw Error(ErrorKind::InvalidArgument, "need at least one replica");
  if (t_macro < 0.0) throw Error(ErrorKind::InvalidTime, "invalid time: t_macro must be >= 0");
  require_sorted(x_grid, "x grid");

  const double horizon = static_cast<double>(n) * t_macro;
  const Index lo = grid_index(n, x_grid.front());
  const Index grid_hi = grid_index(n, x_grid.back());
  ProfileEstimate out;
  out.x_grid = x_grid;
  out.n = n;
  out.t_macro = t_macro;
  out.replicas = replicas;
  out.window_lo = lo;
  out.exact_boundary = u0.right_infinite();
  if (out.exact_boundary) {
    out.window_hi = std::max(lo, grid_index(n, u0.knots().back()));
  } else {
    const double reach = rates.b0() * horizon;
    out.window_hi = grid_hi + static_cast<Index>(std::ceil(reach)) + static_cast<Index>(std::ceil(6.0 * std::sqrt(reach))) + 10;
  }
  const MicroInitial init = initialize_from_profile(u0, n, lo, out.window_hi);
  out.repairs = init.repairs;

  struct ReplicaRun {
    std::vector<Position> at_grid;
    Index agreement_hi = 0;
    std::size_t epochs = 0;
  };
  std::vector<ReplicaRun> runs(replicas);
  auto read = [&](const Trajectory& traj, ReplicaRun& run) {
    for (double x : x_grid) {
      const Index i = grid_index(n, x);
      run.at_grid.push_back(i <= out.window_hi ? traj.at(0, i) : Position::plus_infinity());
    }
  };
  parallel_for(replicas, [&](std::size_t r) {
    ReplicaRun& run = runs[r];
    if (horizon <= 0.0) {
      Trajectory still;
      still.lo = lo;
      still.snapshots = {init.config.positions()};
      read(still, run);
      run.agreement_hi = out.window_hi;
      return;
    }
    const auto bank = ClockBank::generate(rates, lo, out.window_hi, horizon, StreamSeed{master, r});
    if (out.exact_boundary) {
      const auto traj = evolve(init.config, bank, horizon, {horizon});
      run.epochs = traj.epochs_processed;
      run.agreement_hi = out.window_hi;
      read(traj, run);
    } else {
      const auto sw = sandwich_evolve(init.config, bank, horizon, {horizon});
      run.epochs = sw.upper.epochs_processed + sw.lower.epochs_processed;
      run.agreement_hi = sw.agreement.empty() ? lo - 1 : sw.agreement.hi;
      read(sw.upper, run);
    }
  });

  out.min_agreement_hi = out.window_hi;
  for (const auto& run : runs) {
    out.min_agreement_hi = std::min(out.min_agreement_hi, run.agreement_hi);
    out.epochs += run.epochs;
  }
  if (!out.exact_boundary && out.min_agreement_hi < grid_hi)
    throw Error(ErrorKind::WindowTooSmall, "enlarge window: sandwich agreement ends at index " +
                                               std::to_string(out.min_agreement_hi) + " below grid index " +
                                               std::to_string(grid_hi));

  for (std::size_t k = 0; k < x_grid.size(); ++k) {
    std::vector<double> values;
    bool infinite = false;
    for (const auto& run : runs) {
      if (!run.at_grid[k].is_finite()) infinite = true;
      else values.push_back(static_cast<double>(run.at_grid[k].value()) / static_cast<double>(n));
    }
    if (infinite) {
      out.mean.push_back(ExtendedReal::plus_infinity());
      out.stderr_.push_back(0.0);
      continue;
    }
    const Summary sum = summarize(values);
    out.mean.push_back({sum.mean});
    out.stderr_.push_back(sum.stderr_);
  }
  return out;
}

}  // namespace jumpex

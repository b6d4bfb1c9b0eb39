#include "jumpex/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jumpex/error.hpp"

namespace jumpex {

namespace {

void require_valid(const Configuration& config) {
  if (config.size() == 0) throw Error(ErrorKind::InvalidConfiguration, "empty configuration window");
  if (auto v = validate(config); !v)
    throw Error(ErrorKind::InvalidConfiguration,
                "invalid configuration at index " + std::to_string(v.first_violation->left) + ": " +
                    v.first_violation->reason);
}

void require_query_times(const std::vector<double>& query_times, double t) {
  for (std::size_t q = 0; q < query_times.size(); ++q) {
    if (!(query_times[q] >= 0.0) || query_times[q] > t)
      throw Error(ErrorKind::InvalidArgument, "query times must lie in [0, t]");
    if (q > 0 && query_times[q] < query_times[q - 1])
      throw Error(ErrorKind::InvalidArgument, "query times must be sorted");
  }
}

std::span<const ClockStream> window_streams(const ClockBank& clocks, const Configuration& config) {
  if (!clocks.covers(config.lo(), config.hi()))
    throw Error(ErrorKind::UntrackedIndex, "clock bank does not cover the tracked window");
  const auto& all = clocks.streams();
  const auto first = static_cast<std::size_t>(config.lo() - clocks.lo());
  return std::span<const ClockStream>(all).subspan(first, config.size());
}

}  // namespace

Configuration apply_jump(const Configuration& config, Index i, std::int64_t k) {
  if (!config.tracks(i)) throw Error(ErrorKind::UntrackedIndex, "untracked index " + std::to_string(i));
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "jump size must be >= 1");
  Configuration out = config;
  out.set(i, jump_target(config.at(i), k, config.next_of(i)));
  return out;
}

Trajectory evolve_events(const Configuration& config, const MergedEvents& merged, double horizon, double t,
                         const std::vector<double>& query_times, const EvolveOptions& options) {
  require_valid(config);
  if (!(t >= 0.0)) throw Error(ErrorKind::InvalidTime, "invalid time: t must be >= 0");
  if (t > horizon) throw Error(ErrorKind::HorizonExceeded, "horizon exceeded: t is beyond the clock horizon");
  require_query_times(query_times, t);

  Trajectory traj;
  traj.lo = config.lo();
  traj.query_times = query_times;
  traj.snapshots.reserve(query_times.size());
  traj.end_time = t;
  traj.simultaneity_violations = merged.simultaneity_violations;

  Configuration state = config;
  auto& pos = state.positions();
  const Position boundary = state.boundary().position();
  const Index lo = state.lo();
  const std::size_t n = pos.size();
  std::size_t q = 0;

  for (const auto& ev : merged.events) {
    if (ev.time > t) break;
    while (q < query_times.size() && query_times[q] < ev.time) {
      traj.snapshots.push_back(pos);
      ++q;
    }
    const Index offset = ev.site - lo;
    if (offset < 0 || offset >= static_cast<Index>(n)) continue;
    const auto m = static_cast<std::size_t>(offset);
    const Position before = pos[m];
    const Position next = m + 1 < n ? pos[m + 1] : boundary;
    const Position after = jump_target(before, ev.label, next);
    ++traj.epochs_processed;
    if (after != before) {
      pos[m] = after;
      ++traj.moves;
    }
    if (options.record_events) traj.events.push_back({ev.time, ev.site, ev.label, before, after});
    if (options.check_invariants) {
      const bool left_ok = m == 0 || !pos[m - 1].is_finite() || !after.is_finite() || pos[m - 1] < after;
      const bool right_ok = !after.is_finite() || !next.is_finite() || after < next;
      if (!left_ok || !right_ok)
        throw Error(ErrorKind::InvalidConfiguration,
                    "exclusion violated after jump of particle " + std::to_string(ev.site));
    }
  }
  while (q < query_times.size()) {
    traj.snapshots.push_back(pos);
    ++q;
  }
  traj.final_state = std::move(state);
  return traj;
}

Trajectory evolve(const Configuration& config, const ClockBank& clocks, double t,
                  const std::vector<double>& query_times, const EvolveOptions& options) {
  if (t > clocks.horizon()) throw Error(ErrorKind::HorizonExceeded, "horizon exceeded: t is beyond the clock horizon");
  const auto merged = merge_streams(window_streams(clocks, config));
  return evolve_events(config, merged, clocks.horizon(), t, query_times, options);
}

SandwichResult sandwich_evolve(const Configuration& config, const ClockBank& clocks, double t,
                               const std::vector<double>& query_times, const EvolveOptions& options) {
  if (t > clocks.horizon()) throw Error(ErrorKind::HorizonExceeded, "horizon exceeded: t is beyond the clock horizon");
  require_valid(config);
  const auto merged = merge_streams(window_streams(clocks, config));

  Configuration open = config;
  open.set_boundary(RightBoundary::open());
  Configuration frozen = config;
  if (config.boundary().kind != BoundaryKind::Frozen)
    frozen.set_boundary(RightBoundary::frozen(config.positions().back() + 1));

  SandwichResult out;
  out.upper = evolve_events(open, merged, clocks.horizon(), t, query_times, options);
  out.lower = evolve_events(frozen, merged, clocks.horizon(), t, query_times, options);

  const std::size_t n = config.size();
  std::size_t agree = n;
  auto scan = [&agree](const std::vector<Position>& a, const std::vector<Position>& b) {
    for (std::size_t m = 0; m < agree; ++m)
      if (a[m] != b[m]) {
        agree = m;
        break;
      }
  };
  for (std::size_t q = 0; q < query_times.size(); ++q) scan(out.upper.snapshots[q], out.lower.snapshots[q]);
  scan(out.upper.final_state.positions(), out.lower.final_state.positions());
  out.agreement = {config.lo(), config.lo() + static_cast<Index>(agree) - 1};
  return out;
}

void write_trajectory_csv_header(std::ostream& os) { os << "replica,time,index,position\n"; }

void write_trajectory_csv(std::ostream& os, std::uint64_t replica, const Trajectory& trajectory) {
  const auto old_precision = os.precision(17);
  for (std::size_t q = 0; q < trajectory.query_times.size(); ++q) {
    const auto& snap = trajectory.snapshots[q];
    for (std::size_t m = 0; m < snap.size(); ++m)
      os << replica << ',' << trajectory.query_times[q] << ',' << trajectory.lo + static_cast<Index>(m) << ','
         << snap[m].to_string() << '\n';
  }
  os.precision(old_precision);
}

}  // namespace jumpex

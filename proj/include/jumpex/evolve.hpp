#pragma once

#include <ostream>
#include <vector>

#include "jumpex/clocks.hpp"
#include "jumpex/configuration.hpp"

namespace jumpex {

/// pos(i) <- min(pos(i) + k, pos(i+1) - 1); pos(hi+1) comes from the boundary.
Configuration apply_jump(const Configuration& config, Index i, std::int64_t k);

struct JumpRecord {
  double time = 0.0;
  Index index = 0;
  std::int32_t label = 1;
  Position before;
  Position after;
};

struct EvolveOptions {
  bool record_events = false;
  /// Re-check the exclusion rule around every applied jump.
  bool check_invariants = false;
};

struct Trajectory {
  Index lo = 0;
  std::vector<double> query_times;
  /// snapshots[q][i - lo] is the position at query_times[q].
  std::vector<std::vector<Position>> snapshots;
  Configuration final_state;
  double end_time = 0.0;
  std::vector<JumpRecord> events;  // only with record_events
  std::size_t epochs_processed = 0;
  std::size_t moves = 0;  // epochs that changed a position
  std::size_t simultaneity_violations = 0;

  Position at(std::size_t query, Index i) const { return snapshots[query][static_cast<std::size_t>(i - lo)]; }
};

/// Runs the jump rule over every epoch in [0, t] of the sites in the window,
/// in merged time order. Snapshots include all epochs at times <= query time.
///
/// Throws Error(HorizonExceeded) when t is beyond the clock horizon and
/// Error(UntrackedIndex) when the bank does not cover the window.
Trajectory evolve(const Configuration& config, const ClockBank& clocks, double t,
                  const std::vector<double>& query_times, const EvolveOptions& options = {});

/// Same, over a pre-merged event list (events for untracked sites are skipped).
Trajectory evolve_events(const Configuration& config, const MergedEvents& events, double horizon, double t,
                         const std::vector<double>& query_times, const EvolveOptions& options = {});

struct SandwichResult {
  Trajectory upper;  // open right boundary
  Trajectory lower;  // frozen phantom at its initial position
  /// Largest prefix [lo, m] on which upper and lower agree at every query
  /// time and at t. Inside it both equal the infinite-lattice evolution.
  IndexRange agreement;
};

/// Brackets the untracked particles right of the window. The phantom for the
/// lower run is the configured frozen phantom, or pos(hi) + 1 when the input
/// boundary is open.
SandwichResult sandwich_evolve(const Configuration& config, const ClockBank& clocks, double t,
                               const std::vector<double>& query_times, const EvolveOptions& options = {});

/// Header "replica,time,index,position"; infinities as "inf" / "-inf".
void write_trajectory_csv_header(std::ostream& os);
void write_trajectory_csv(std::ostream& os, std::uint64_t replica, const Trajectory& trajectory);

}  // namespace jumpex

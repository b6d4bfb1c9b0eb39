#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jumpex/rates.hpp"
#include "jumpex/rng.hpp"

namespace jumpex {

using Index = std::int64_t;

struct Epoch {
  double time = 0.0;
  std::int32_t label = 1;
};

/// Labeled Poisson epochs for one site on [0, horizon]. Immutable once built.
struct ClockStream {
  Index site = 0;
  double horizon = 0.0;
  std::vector<Epoch> epochs;

  /// Epochs strictly after `offset`, re-timed to start at zero, relabelled to
  /// `new_site`. Horizon shrinks by `offset`.
  ClockStream shifted(double offset, Index new_site) const;
};

/// Epoch times form a rate-B0 Poisson process on [0, horizon], labels are
/// i.i.d. with P(k) = beta_k / B0. The stream is a pure function of
/// (table, site, horizon, seed).
ClockStream sample_clock_stream(const RateTable& table, Index site, double horizon, StreamSeed seed);

/// Streams for the contiguous site range [lo, hi], all sharing one horizon.
class ClockBank {
 public:
  ClockBank() = default;
  ClockBank(Index lo, std::vector<ClockStream> streams);

  static ClockBank generate(const RateTable& table, Index lo, Index hi, double horizon, StreamSeed seed);

  Index lo() const noexcept { return lo_; }
  Index hi() const noexcept { return lo_ + static_cast<Index>(streams_.size()) - 1; }
  double horizon() const noexcept { return horizon_; }
  bool covers(Index lo, Index hi) const noexcept { return lo >= lo_ && hi <= this->hi(); }
  const ClockStream& stream(Index site) const;
  const std::vector<ClockStream>& streams() const noexcept { return streams_; }

  /// Bank whose site i reads this bank's site i + index_shift, with epochs
  /// after `time_shift` moved back to start at zero. Covers every site whose
  /// source lies in this bank.
  ClockBank shifted(double time_shift, Index index_shift) const;

 private:
  Index lo_ = 0;
  double horizon_ = 0.0;
  std::vector<ClockStream> streams_;
};

struct ClockEvent {
  double time = 0.0;
  Index site = 0;
  std::int32_t label = 1;
  std::uint32_t index = 0;  // position within the site's stream
};

struct MergedEvents {
  std::vector<ClockEvent> events;
  /// Exact time ties between distinct sites. They are resolved by the
  /// (time, site, index) order but flagged for the caller.
  std::size_t simultaneity_violations = 0;
};

MergedEvents merge_streams(std::span<const ClockStream> streams);

}  // namespace jumpex

#include "jumpex/clocks.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jumpex/error.hpp"

namespace jumpex {

ClockStream sample_clock_stream(const RateTable& table, Index site, double horizon, StreamSeed seed) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw Error(ErrorKind::InvalidArgument, "clock horizon must be positive and finite");
  CounterStream rng(seed, StreamDomain::Clocks, static_cast<std::uint64_t>(site));
  auto uniform = [&rng] { return rng.next_open01(); };

  ClockStream s;
  s.site = site;
  s.horizon = horizon;
  s.epochs.reserve(static_cast<std::size_t>(table.b0() * horizon * 1.1) + 16);
  const double inv_rate = 1.0 / table.b0();
  double time = 0.0;
  for (;;) {
    const double next = time - std::log(uniform()) * inv_rate;
    // Exponential gaps are a.s. positive; a gap that underflows to zero would
    // break strict ordering within the stream, so it is redrawn.
    if (!(next > time)) continue;
    if (next > horizon) break;
    time = next;
    s.epochs.push_back({time, table.sample_label(uniform)});
  }
  return s;
}

ClockStream ClockStream::shifted(double offset, Index new_site) const {
  ClockStream out;
  out.site = new_site;
  out.horizon = horizon - offset;
  auto first = std::upper_bound(epochs.begin(), epochs.end(), offset,
                                [](double t, const Epoch& e) { return t < e.time; });
  out.epochs.reserve(static_cast<std::size_t>(epochs.end() - first));
  for (auto it = first; it != epochs.end(); ++it) out.epochs.push_back({it->time - offset, it->label});
  return out;
}

ClockBank::ClockBank(Index lo, std::vector<ClockStream> streams) : lo_(lo), streams_(std::move(streams)) {
  if (streams_.empty()) throw Error(ErrorKind::InvalidArgument, "clock bank needs at least one stream");
  horizon_ = streams_.front().horizon;
  for (std::size_t m = 0; m < streams_.size(); ++m) {
    if (streams_[m].site != lo_ + static_cast<Index>(m))
      throw Error(ErrorKind::InvalidArgument, "clock bank streams must cover consecutive sites");
    if (streams_[m].horizon != horizon_)
      throw Error(ErrorKind::InvalidArgument, "clock bank streams must share one horizon");
  }
}

ClockBank ClockBank::generate(const RateTable& table, Index lo, Index hi, double horizon, StreamSeed seed) {
  if (hi < lo) throw Error(ErrorKind::InvalidArgument, "empty clock bank range");
  std::vector<ClockStream> streams;
  streams.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (Index i = lo; i <= hi; ++i) streams.push_back(sample_clock_stream(table, i, horizon, seed));
  return ClockBank(lo, std::move(streams));
}

const ClockStream& ClockBank::stream(Index site) const {
  if (site < lo_ || site > hi())
    throw Error(ErrorKind::UntrackedIndex, "no clock stream for site " + std::to_string(site));
  return streams_[static_cast<std::size_t>(site - lo_)];
}

ClockBank ClockBank::shifted(double time_shift, Index index_shift) const {
  if (!(time_shift >= 0.0) || !(time_shift < horizon_))
    throw Error(ErrorKind::HorizonExceeded, "horizon exceeded: time shift beyond clock horizon");
  std::vector<ClockStream> out;
  out.reserve(streams_.size());
  for (const auto& s : streams_) out.push_back(s.shifted(time_shift, s.site - index_shift));
  return ClockBank(lo_ - index_shift, std::move(out));
}

MergedEvents merge_streams(std::span<const ClockStream> streams) {
  MergedEvents merged;
  std::size_t total = 0;
  for (const auto& s : streams) total += s.epochs.size();
  merged.events.reserve(total);
  for (const auto& s : streams)
    for (std::size_t m = 0; m < s.epochs.size(); ++m)
      merged.events.push_back({s.epochs[m].time, s.site, s.epochs[m].label, static_cast<std::uint32_t>(m)});
  std::sort(merged.events.begin(), merged.events.end(), [](const ClockEvent& a, const ClockEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.site != b.site) return a.site < b.site;
    return a.index < b.index;
  });
  for (std::size_t m = 1; m < merged.events.size(); ++m)
    if (merged.events[m].time == merged.events[m - 1].time && merged.events[m].site != merged.events[m - 1].site)
      ++merged.simultaneity_violations;
  return merged;
}

}  // namespace jumpex

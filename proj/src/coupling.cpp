#include "jumpex/coupling.hpp"

#include <algorithm>
#include <string>

#include "jumpex/error.hpp"

namespace jumpex {

namespace {

WedgeProcess make_wedge(Index anchor, std::int64_t offset, Index depth) {
  WedgeProcess w;
  w.anchor = anchor;
  w.offset = offset;
  w.depth = depth;
  w.pos.reserve(static_cast<std::size_t>(depth + 1));
  for (Index i = -depth; i <= 0; ++i) w.pos.emplace_back(offset + i);
  return w;
}

void require_family_shape(Index j_min, Index j_max, Index depth) {
  if (j_max < j_min) throw Error(ErrorKind::InvalidArgument, "empty wedge anchor range");
  if (depth < j_max - j_min)
    throw Error(ErrorKind::WindowTooSmall, "wedge depth must be at least j_max - j_min");
  // Each wedge stores depth + 1 positions.
  if (static_cast<double>(j_max - j_min + 1) * static_cast<double>(depth + 1) > kMaxFamilyCells)
    throw Error(ErrorKind::InvalidArgument, "wedge family too large: anchors x (depth + 1) exceeds 1e7");
}

}  // namespace

WedgeFamily build_wedge_family(const Configuration& sigma0, Index j_min, Index j_max, Index depth) {
  require_family_shape(j_min, j_max, depth);
  WedgeFamily family{j_min, j_max, depth, {}};
  family.wedges.reserve(static_cast<std::size_t>(j_max - j_min + 1));
  for (Index j = j_min; j <= j_max; ++j) {
    const Position anchor = sigma0.at(j);
    if (!anchor.is_finite())
      throw Error(ErrorKind::AnchorAtInfinity, "anchor at infinity: sigma(" + std::to_string(j) + ", 0)");
    family.wedges.push_back(make_wedge(j, anchor.value(), depth));
  }
  return family;
}

WedgeFamily build_centered_family(Index j_min, Index j_max, Index depth) {
  require_family_shape(j_min, j_max, depth);
  WedgeFamily family{j_min, j_max, depth, {}};
  for (Index j = j_min; j <= j_max; ++j) family.wedges.push_back(make_wedge(j, 0, depth));
  return family;
}

CoupledTrajectory evolve_coupled(const Configuration& sigma, const WedgeFamily& family, const ClockBank& clocks,
                                 double t, const std::vector<double>& query_times) {
  const IndexRange wedge_sites = family.clock_sites();
  const Index site_lo = std::min(sigma.lo(), wedge_sites.lo);
  const Index site_hi = std::max(sigma.hi(), wedge_sites.hi);
  if (!clocks.covers(site_lo, site_hi))
    throw Error(ErrorKind::UntrackedIndex, "clock bank does not cover every site read by the coupled processes");
  if (t > clocks.horizon()) throw Error(ErrorKind::HorizonExceeded, "horizon exceeded: t is beyond the clock horizon");

  const auto first = static_cast<std::size_t>(site_lo - clocks.lo());
  const auto count = static_cast<std::size_t>(site_hi - site_lo + 1);
  const auto merged = merge_streams(std::span<const ClockStream>(clocks.streams()).subspan(first, count));

  CoupledTrajectory run;
  run.sigma_initial = sigma;
  run.sigma = evolve_events(sigma, merged, clocks.horizon(), t, query_times);
  run.query_times = query_times;
  run.initial = family;

  const Index depth = family.depth;
  std::vector<std::vector<Position>> state;
  state.reserve(family.wedges.size());
  for (const auto& w : family.wedges) state.push_back(w.pos);
  run.wedge_snapshots.assign(family.wedges.size(), {});
  for (auto& snaps : run.wedge_snapshots) snaps.reserve(query_times.size());

  auto snapshot = [&] {
    for (std::size_t w = 0; w < state.size(); ++w) run.wedge_snapshots[w].push_back(state[w]);
  };

  std::size_t q = 0;
  for (const auto& ev : merged.events) {
    if (ev.time > t) break;
    while (q < query_times.size() && query_times[q] < ev.time) {
      snapshot();
      ++q;
    }
    ++run.epochs_processed;
    // Wedge j reads site m at depth m - j, which must lie in [-depth, 0].
    const Index j_lo = std::max(family.j_min, ev.site);
    const Index j_hi = std::min(family.j_max, ev.site + depth);
    for (Index j = j_lo; j <= j_hi; ++j) {
      auto& p = state[static_cast<std::size_t>(j - family.j_min)];
      const auto m = static_cast<std::size_t>(ev.site - j + depth);
      const Position next = m + 1 < p.size() ? p[m + 1] : Position::plus_infinity();
      p[m] = jump_target(p[m], ev.label, next);
    }
  }
  while (q < query_times.size()) {
    snapshot();
    ++q;
  }
  return run;
}

IdentityReport check_variational_identity(const CoupledTrajectory& run, const ClockBank& clocks, IndexRange indices,
                                          std::optional<Index> span) {
  const auto& family = run.initial;
  const Configuration& sigma0 = run.sigma_initial;
  const bool open = sigma0.boundary().kind == BoundaryKind::Open;

  IdentityReport report;
  for (Index i = indices.lo; i <= indices.hi; ++i) {
    if (!sigma0.tracks(i)) throw Error(ErrorKind::UntrackedIndex, "untracked index " + std::to_string(i));
    if (i < family.j_min || i > family.j_max)
      throw Error(ErrorKind::InvalidArgument, "no wedge anchored at checked index " + std::to_string(i));
    Index J = family.j_max;
    if (span) J = std::min(J, i + *span);
    if (i - J < -family.depth)
      throw Error(ErrorKind::WindowTooSmall, "wedge depth does not reach index " + std::to_string(i));

    // Anchors beyond J are all at +inf exactly when sigma's tail is.
    const bool nothing_beyond =
        J == sigma0.hi() ? open : sigma0.at(J + 1).is_plus_infinity();
    const std::int64_t deep_start = family.wedge(J).offset + (i - J);

    for (std::size_t q = 0; q < run.query_times.size(); ++q) {
      ++report.checked;
      const Position s = run.sigma.at(q, i);
      Position best = Position::plus_infinity();
      Index argmin = i;
      for (Index j = i; j <= J; ++j) {
        const Position z = run.zeta(j, q, i - j);
        if (z < best) best = z, argmin = j;
      }
      const bool unmoved = run.zeta(J, q, i - J) == Position(deep_start);
      const bool certified = nothing_beyond || unmoved;
      report.exhaustive += nothing_beyond;
      if (certified) ++report.certificates_valid;
      auto describe = [&] {
        IdentityViolation v{i, run.query_times[q], s, best, argmin, {}};
        if (clocks.covers(i, i))
          for (const auto& e : clocks.stream(i).epochs)
            if (e.time <= run.query_times[q]) v.site_epochs.push_back(e);
        return v;
      };
      if (!certified && !report.first_certificate_failure) report.first_certificate_failure = describe();
      if (best == s) ++report.equalities;
      else if (!report.first_violation) report.first_violation = describe();
    }
  }
  return report;
}

MonotonicityReport check_wedge_monotonicity(const CoupledTrajectory& run) {
  const auto& family = run.initial;
  MonotonicityReport report;
  for (std::size_t q = 0; q < run.query_times.size(); ++q)
    for (Index j0 = family.j_min; j0 <= family.j_max; ++j0)
      for (Index j1 = j0; j1 <= family.j_max; ++j1) {
        const std::int64_t off0 = family.wedge(j0).offset, off1 = family.wedge(j1).offset;
        for (Index i = j1 - family.depth; i <= j0; ++i) {
          ++report.checked;
          const std::int64_t xi0 = run.zeta(j0, q, i - j0).value() - off0;
          const std::int64_t xi1 = run.zeta(j1, q, i - j1).value() - off1;
          if (xi0 < xi1) {
            ++report.violations;
            if (!report.first_violation) report.first_violation = MonotonicityViolation{i, j0, j1, run.query_times[q], xi0, xi1};
          }
        }
      }
  return report;
}

SubadditivityReport check_subadditivity(const WedgeProcess& xi, const ClockBank& clocks, Index h, double s,
                                        double t) {
  if (h > 0) throw Error(ErrorKind::InvalidArgument, "h must be <= 0");
  if (h < -xi.depth) throw Error(ErrorKind::WindowTooSmall, "h is deeper than the tracked wedge");
  if (!(s >= 0.0) || !(t >= 0.0)) throw Error(ErrorKind::InvalidTime, "invalid time: s and t must be >= 0");
  if (s + t > clocks.horizon()) throw Error(ErrorKind::HorizonExceeded, "horizon exceeded: s + t beyond clock horizon");

  // xi itself, centered, on its own clock sites i + anchor.
  std::vector<Position> start;
  for (Index i = -xi.depth; i <= 0; ++i) start.emplace_back(i);
  const Configuration xi0(-xi.depth, start);
  const ClockBank own = clocks.shifted(0.0, xi.anchor);
  const auto base = evolve(xi0, own, s + t, {s, s + t});
  auto xi_at = [&](std::size_t q, Index i) { return base.at(q, i); };

  // Particles i with h + i >= -depth are tracked by both continuations.
  const Index width = xi.depth + h;
  const ClockBank later = clocks.shifted(s, h + xi.anchor);

  // sigma': xi seen from index h and time s.
  std::vector<Position> cont;
  for (Index i = -width; i <= -h; ++i) cont.push_back(xi_at(0, h + i));
  const auto continued = evolve(Configuration(-width, cont), later, t, {t});

  // sigma'': packed half-line restarted at xi(h, s).
  const std::int64_t root = xi_at(0, h).value();
  std::vector<Position> packed;
  for (Index i = -width; i <= 0; ++i) packed.emplace_back(root + i);
  const auto restarted = evolve(Configuration(-width, packed), later, t, {t});

  SubadditivityReport report;
  for (Index i = -width; i <= -h; ++i)
    if (continued.at(0, i) != xi_at(1, h + i)) report.continuation_consistent = false;
  for (Index i = -width; i <= 0; ++i) {
    ++report.checked;
    const Position lhs = xi_at(1, h + i);
    const Position rhs = restarted.at(0, i);
    if (lhs == rhs) ++report.equalities;
    if (lhs > rhs) {
      ++report.violations;
      if (!report.first_violation) report.first_violation = i;
    }
  }
  return report;
}

}  // namespace jumpex

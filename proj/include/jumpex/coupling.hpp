#pragma once

#include <optional>
#include <vector>

#include "jumpex/clocks.hpp"
#include "jumpex/configuration.hpp"
#include "jumpex/evolve.hpp"

namespace jumpex {

/// Packed half-line anchored at sigma(anchor, 0): particle i in [-depth, 0]
/// starts at offset + i, sits at +inf for i > 0, and reads clock site
/// i + anchor.
struct WedgeProcess {
  Index anchor = 0;
  std::int64_t offset = 0;
  Index depth = 0;
  std::vector<Position> pos;  // pos[i + depth]

  Position at(Index i) const { return pos[static_cast<std::size_t>(i + depth)]; }
  Index reads_site(Index i) const { return i + anchor; }
};

struct WedgeFamily {
  Index j_min = 0;
  Index j_max = -1;
  Index depth = 0;
  std::vector<WedgeProcess> wedges;

  const WedgeProcess& wedge(Index j) const { return wedges[static_cast<std::size_t>(j - j_min)]; }
  /// Sites read by any wedge.
  IndexRange clock_sites() const { return {j_min - depth, j_max}; }
};

/// Cap on anchors x (depth + 1) stored positions per family.
inline constexpr double kMaxFamilyCells = 1e7;

/// One wedge per anchor j in [j_min, j_max], offsets sigma0(j). Throws
/// Error(AnchorAtInfinity) for an infinite anchor,
/// Error(WindowTooSmall) when depth < j_max - j_min and
/// Error(InvalidArgument) above kMaxFamilyCells.
WedgeFamily build_wedge_family(const Configuration& sigma0, Index j_min, Index j_max, Index depth);

/// Same family with every offset zero: each member is a centered process.
WedgeFamily build_centered_family(Index j_min, Index j_max, Index depth);

struct CoupledTrajectory {
  Configuration sigma_initial;
  Trajectory sigma;
  std::vector<double> query_times;
  /// wedge_snapshots[w][q][i + depth]
  std::vector<std::vector<std::vector<Position>>> wedge_snapshots;
  WedgeFamily initial;
  std::size_t epochs_processed = 0;

  Position zeta(Index j, std::size_t q, Index i) const {
    return wedge_snapshots[static_cast<std::size_t>(j - initial.j_min)][q][static_cast<std::size_t>(i + initial.depth)];
  }
};

/// Evolves sigma and every wedge from one merged event list: an epoch of
/// site m moves sigma particle m and wedge particle (j, m - j) for every
/// wedge that tracks it. The processes never see each other.
CoupledTrajectory evolve_coupled(const Configuration& sigma, const WedgeFamily& family, const ClockBank& clocks,
                                 double t, const std::vector<double>& query_times);

struct IdentityViolation {
  Index i = 0;
  double time = 0.0;
  Position sigma;
  Position minimum;
  Index argmin = 0;
  std::vector<Epoch> site_epochs;  // epochs of site i up to `time`, for replay
};

struct IdentityReport {
  std::size_t checked = 0;
  std::size_t equalities = 0;
  std::size_t certificates_valid = 0;
  std::size_t exhaustive = 0;  // no finite anchor beyond the range at all
  std::optional<IdentityViolation> first_violation;
  std::optional<IdentityViolation> first_certificate_failure;

  bool exact() const { return equalities == checked; }
  bool covered() const { return certificates_valid == checked; }
};

/// For every i in `indices` and every query time, compares sigma(i, s) with
/// the minimum of zeta^j(i - j, s) over j in [i, J], J = min(j_max, i + span).
///
/// The truncation is certified when no finite anchor exists beyond J, or
/// when wedge J's particle at depth i - J has not moved by s (then every
/// term j > J dominates term J).
IdentityReport check_variational_identity(const CoupledTrajectory& run, const ClockBank& clocks, IndexRange indices,
                                          std::optional<Index> span = std::nullopt);

struct MonotonicityViolation {
  Index i = 0, j0 = 0, j1 = 0;
  double time = 0.0;
  std::int64_t xi0 = 0, xi1 = 0;
};

struct MonotonicityReport {
  std::size_t checked = 0;
  std::size_t violations = 0;
  std::optional<MonotonicityViolation> first_violation;
};

/// xi^{j0}(i - j0, s) >= xi^{j1}(i - j1, s) for i <= j0 <= j1 wherever both
/// depths are tracked; xi is zeta minus the offset.
MonotonicityReport check_wedge_monotonicity(const CoupledTrajectory& run);

struct SubadditivityReport {
  std::size_t checked = 0;
  std::size_t violations = 0;
  std::size_t equalities = 0;
  /// The restarted copy of xi from time s reproduced xi(h + i, s + t).
  bool continuation_consistent = true;
  std::optional<Index> first_violation;
};

/// Path-wise xi(h + i, s + t) <= xi(h, s) + xi~(i, t), where xi~ restarts a
/// packed half-line at xi(h, s) reading clocks D_{h+i} after time s.
SubadditivityReport check_subadditivity(const WedgeProcess& xi, const ClockBank& clocks, Index h, double s,
                                        double t);

}  // namespace jumpex

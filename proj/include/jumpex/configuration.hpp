#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jumpex/clocks.hpp"
#include "jumpex/position.hpp"

namespace jumpex {

enum class BoundaryKind { Open, Frozen };

/// What sits at index hi + 1: nothing (+inf) or a phantom particle that never
/// moves.
struct RightBoundary {
  BoundaryKind kind = BoundaryKind::Open;
  Position phantom = Position::plus_infinity();

  static RightBoundary open() { return {}; }
  static RightBoundary frozen(Position at) { return {BoundaryKind::Frozen, at}; }
  Position position() const { return kind == BoundaryKind::Open ? Position::plus_infinity() : phantom; }

  friend bool operator==(const RightBoundary&, const RightBoundary&) = default;
};

struct IndexRange {
  Index lo = 0;
  Index hi = -1;

  bool empty() const noexcept { return hi < lo; }
  bool contains(Index i) const noexcept { return i >= lo && i <= hi; }
  Index size() const noexcept { return empty() ? 0 : hi - lo + 1; }
};

struct Violation {
  Index left = 0;  // offending pair is (left, left + 1); left == hi means the boundary
  std::string reason;
};

struct ValidationResult {
  bool valid = true;
  std::optional<Violation> first_violation;
  explicit operator bool() const noexcept { return valid; }
};

/// Particle positions for the tracked indices [lo, hi].
class Configuration {
 public:
  Configuration() = default;
  Configuration(Index lo, std::vector<Position> positions, RightBoundary boundary = RightBoundary::open());

  Index lo() const noexcept { return lo_; }
  Index hi() const noexcept { return lo_ + static_cast<Index>(pos_.size()) - 1; }
  IndexRange window() const noexcept { return {lo(), hi()}; }
  std::size_t size() const noexcept { return pos_.size(); }
  bool tracks(Index i) const noexcept { return i >= lo() && i <= hi(); }

  Position at(Index i) const;
  void set(Index i, Position p);
  /// Position of particle i + 1 as seen by particle i (boundary for i == hi).
  Position next_of(Index i) const;

  const std::vector<Position>& positions() const noexcept { return pos_; }
  std::vector<Position>& positions() noexcept { return pos_; }
  const RightBoundary& boundary() const noexcept { return boundary_; }
  void set_boundary(RightBoundary b) { boundary_ = b; }

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  Index lo_ = 0;
  std::vector<Position> pos_;
  RightBoundary boundary_;
};

/// pos(i) + 1 <= pos(i+1) for every adjacent pair, the frozen phantom
/// included; -inf only as a leftmost run and +inf only as a rightmost run.
ValidationResult validate(const Configuration& config);

/// Step configuration: pos(i) = i on [-depth, 0], +inf beyond (open boundary).
Configuration step_configuration(Index depth);

}  // namespace jumpex

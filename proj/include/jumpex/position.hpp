#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <string>

namespace jumpex {

/// A lattice site in Z extended by +inf and -inf.
///
/// Infinities absorb finite shifts: (+inf) - 1 == +inf and (-inf) + k == -inf.
class Position {
 public:
  constexpr Position() = default;
  constexpr explicit Position(std::int64_t site) : raw_(site) {}

  static constexpr Position plus_infinity() { return Position(kPlusInf, Raw{}); }
  static constexpr Position minus_infinity() { return Position(kMinusInf, Raw{}); }

  constexpr bool is_finite() const { return raw_ != kPlusInf && raw_ != kMinusInf; }
  constexpr bool is_plus_infinity() const { return raw_ == kPlusInf; }
  constexpr bool is_minus_infinity() const { return raw_ == kMinusInf; }

  /// The finite site. Callers check is_finite() first.
  constexpr std::int64_t value() const { return raw_; }

  constexpr Position operator+(std::int64_t k) const { return is_finite() ? Position(raw_ + k) : *this; }
  constexpr Position operator-(std::int64_t k) const { return is_finite() ? Position(raw_ - k) : *this; }

  friend constexpr auto operator<=>(Position a, Position b) { return a.raw_ <=> b.raw_; }
  friend constexpr bool operator==(Position a, Position b) = default;

  /// "inf", "-inf" or the decimal site.
  std::string to_string() const;
  static Position parse(const std::string& text);

 private:
  struct Raw {};
  static constexpr std::int64_t kPlusInf = std::numeric_limits<std::int64_t>::max();
  static constexpr std::int64_t kMinusInf = std::numeric_limits<std::int64_t>::min();
  constexpr Position(std::int64_t raw, Raw) : raw_(raw) {}

  std::int64_t raw_ = 0;
};

/// Jump rule: min(pos + k, next - 1).
constexpr Position jump_target(Position pos, std::int64_t k, Position next) {
  const Position free = pos + k;
  const Position blocked = next - 1;
  return free < blocked ? free : blocked;
}

}  // namespace jumpex

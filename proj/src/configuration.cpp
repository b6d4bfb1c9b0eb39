#include "jumpex/configuration.hpp"

#include <charconv>

#include "jumpex/error.hpp"

namespace jumpex {

std::string Position::to_string() const {
  if (is_plus_infinity()) return "inf";
  if (is_minus_infinity()) return "-inf";
  return std::to_string(raw_);
}

Position Position::parse(const std::string& text) {
  if (text == "inf" || text == "+inf") return plus_infinity();
  if (text == "-inf") return minus_infinity();
  std::int64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw Error(ErrorKind::InvalidArgument, "not a position: '" + text + "'");
  return Position(v);
}

Configuration::Configuration(Index lo, std::vector<Position> positions, RightBoundary boundary)
    : lo_(lo), pos_(std::move(positions)), boundary_(boundary) {}

Position Configuration::at(Index i) const {
  if (!tracks(i)) throw Error(ErrorKind::UntrackedIndex, "untracked index " + std::to_string(i));
  return pos_[static_cast<std::size_t>(i - lo_)];
}

void Configuration::set(Index i, Position p) {
  if (!tracks(i)) throw Error(ErrorKind::UntrackedIndex, "untracked index " + std::to_string(i));
  pos_[static_cast<std::size_t>(i - lo_)] = p;
}

Position Configuration::next_of(Index i) const { return i == hi() ? boundary_.position() : at(i + 1); }

ValidationResult validate(const Configuration& config) {
  const auto& p = config.positions();
  auto fail = [](Index left, std::string reason) {
    return ValidationResult{false, Violation{left, std::move(reason)}};
  };
  for (std::size_t m = 0; m + 1 < p.size(); ++m) {
    const Index left = config.lo() + static_cast<Index>(m);
    const Position a = p[m], b = p[m + 1];
    if (a.is_plus_infinity() && !b.is_plus_infinity()) return fail(left, "+inf is not a rightmost run");
    if (b.is_minus_infinity() && !a.is_minus_infinity()) return fail(left, "-inf is not a leftmost run");
    if (a.is_finite() && b.is_finite() && !(a.value() + 1 <= b.value()))
      return fail(left, "exclusion violated: pos(i) + 1 > pos(i + 1)");
  }
  if (!p.empty() && config.boundary().kind == BoundaryKind::Frozen) {
    const Position last = p.back(), phantom = config.boundary().phantom;
    if (phantom.is_minus_infinity()) return fail(config.hi(), "frozen phantom at -inf");
    if (last.is_plus_infinity() && !phantom.is_plus_infinity()) return fail(config.hi(), "+inf is not a rightmost run");
    if (last.is_finite() && phantom.is_finite() && !(last.value() + 1 <= phantom.value()))
      return fail(config.hi(), "exclusion violated against frozen phantom");
  }
  return {};
}

Configuration step_configuration(Index depth) {
  if (depth < 0) throw Error(ErrorKind::InvalidArgument, "step depth must be >= 0");
  std::vector<Position> p;
  p.reserve(static_cast<std::size_t>(depth + 1));
  for (Index i = -depth; i <= 0; ++i) p.emplace_back(i);
  return Configuration(-depth, std::move(p), RightBoundary::open());
}

}  // namespace jumpex

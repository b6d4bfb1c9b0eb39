#pragma once

#include <stdexcept>
#include <string>

namespace jumpex {

enum class ErrorKind {
  DegenerateRates,
  DivergentTail,
  InvalidArgument,
  UntrackedIndex,
  HorizonExceeded,
  InvalidConfiguration,
  AnchorAtInfinity,
  WindowTooSmall,
  TruncationTooSmall,
  InvalidTime,
  InvalidDensity,
  Config,
};

/// Every failure raised by the library carries a kind so callers (and the
/// CLI exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace jumpex

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace jumpex {

/// Geometric tail beta_k = c * q^k for every k >= start.
struct GeometricTail {
  double c = 0.0;
  double q = 0.0;
  std::int64_t start = 1;
};

struct RateEntry {
  std::int64_t k = 1;
  double rate = 0.0;
};

/// Jump-size rates beta_k and their moments B_m = sum_k k^m beta_k.
///
/// The tail, when present, is never truncated: moments use the closed-form
/// geometric series and label sampling uses the closed-form tail quantile.
class RateTable {
 public:
  const std::vector<RateEntry>& entries() const noexcept { return entries_; }
  const std::optional<GeometricTail>& tail() const noexcept { return tail_; }

  double b0() const noexcept { return b0_; }
  double b1() const noexcept { return b1_; }
  double b2() const noexcept { return b2_; }

  /// beta_k, including the tail.
  double rate(std::int64_t k) const noexcept;

  /// Maps one uniform u in (0,1) (and, for tail labels, a second uniform) to
  /// a label with P(k) = beta_k / B0.
  template <class UniformSource>
  std::int32_t sample_label(UniformSource&& next_uniform) const;

  bool single_label() const noexcept { return !tail_ && positive_.size() == 1; }

  std::string describe() const;

 private:
  friend RateTable make_rate_table(std::vector<RateEntry> explicit_rates,
                                   std::optional<GeometricTail> tail);

  std::int32_t tail_label(double u) const noexcept;

  std::vector<RateEntry> entries_;
  std::optional<GeometricTail> tail_;
  // Explicit entries with positive rate and their cumulative rate sums.
  std::vector<RateEntry> positive_;
  std::vector<double> cumulative_;
  double explicit_mass_ = 0.0;
  double tail_mass_ = 0.0;
  double b0_ = 0.0, b1_ = 0.0, b2_ = 0.0;
};

/// Throws Error(DegenerateRates) when every rate is zero and
/// Error(DivergentTail) when the tail ratio is not in (0, 1).
RateTable make_rate_table(std::vector<RateEntry> explicit_rates,
                          std::optional<GeometricTail> tail = std::nullopt);

/// beta_1 = 1, all other rates zero.
RateTable tasep_rates();

template <class UniformSource>
std::int32_t RateTable::sample_label(UniformSource&& next_uniform) const {
  const double u = next_uniform();
  if (single_label()) return static_cast<std::int32_t>(positive_.front().k);
  const double target = u * b0_;
  if (target < explicit_mass_ || !tail_) {
    for (std::size_t m = 0; m < cumulative_.size(); ++m)
      if (target < cumulative_[m]) return static_cast<std::int32_t>(positive_[m].k);
    if (!tail_) return static_cast<std::int32_t>(positive_.back().k);
  }
  return tail_label(next_uniform());
}

}  // namespace jumpex

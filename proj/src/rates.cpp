#include "jumpex/rates.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "jumpex/error.hpp"

namespace jumpex {

namespace {

// sum_{k >= k0} k^m q^k for m = 0, 1, 2, via sum_{j>=0} (k0 + j)^m q^j.
struct TailSums {
  double s0, s1, s2;
};

TailSums geometric_sums(double q, std::int64_t start) {
  const double k0 = static_cast<double>(start);
  const double r = 1.0 - q;
  const double a0 = 1.0 / r;
  const double a1 = q / (r * r);
  const double a2 = q * (1.0 + q) / (r * r * r);
  const double lead = std::pow(q, k0);
  return {lead * a0, lead * (k0 * a0 + a1), lead * (k0 * k0 * a0 + 2.0 * k0 * a1 + a2)};
}

}  // namespace

RateTable make_rate_table(std::vector<RateEntry> explicit_rates, std::optional<GeometricTail> tail) {
  std::sort(explicit_rates.begin(), explicit_rates.end(),
            [](const RateEntry& a, const RateEntry& b) { return a.k < b.k; });
  for (std::size_t m = 0; m < explicit_rates.size(); ++m) {
    const auto& e = explicit_rates[m];
    if (e.k < 1) throw Error(ErrorKind::InvalidArgument, "jump size must be >= 1");
    if (!(e.rate >= 0.0) || !std::isfinite(e.rate))
      throw Error(ErrorKind::InvalidArgument, "rates must be finite and nonnegative");
    if (m > 0 && explicit_rates[m - 1].k == e.k)
      throw Error(ErrorKind::InvalidArgument, "duplicate jump size " + std::to_string(e.k));
  }
  if (tail) {
    if (!(tail->q > 0.0)) throw Error(ErrorKind::InvalidArgument, "tail ratio must be positive");
    if (!(tail->q < 1.0)) throw Error(ErrorKind::DivergentTail, "divergent tail: q must be < 1");
    if (!(tail->c >= 0.0) || !std::isfinite(tail->c))
      throw Error(ErrorKind::InvalidArgument, "tail scale must be finite and nonnegative");
    if (!explicit_rates.empty() && tail->start <= explicit_rates.back().k)
      throw Error(ErrorKind::InvalidArgument, "tail must start after the last explicit jump size");
    if (tail->start < 1) throw Error(ErrorKind::InvalidArgument, "tail start must be >= 1");
    if (tail->c == 0.0) tail.reset();
  }

  RateTable t;
  t.entries_ = explicit_rates;
  t.tail_ = tail;
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (const auto& e : explicit_rates) {
    if (e.rate <= 0.0) continue;
    const double k = static_cast<double>(e.k);
    b0 += e.rate;
    b1 += k * e.rate;
    b2 += k * k * e.rate;
    t.positive_.push_back(e);
    t.cumulative_.push_back(b0);
  }
  t.explicit_mass_ = b0;
  if (tail) {
    const auto s = geometric_sums(tail->q, tail->start);
    t.tail_mass_ = tail->c * s.s0;
    b0 += tail->c * s.s0;
    b1 += tail->c * s.s1;
    b2 += tail->c * s.s2;
  }
  if (!(b0 > 0.0)) throw Error(ErrorKind::DegenerateRates, "degenerate rates: all rates are zero");
  t.b0_ = b0;
  t.b1_ = b1;
  t.b2_ = b2;
  return t;
}

RateTable tasep_rates() { return make_rate_table({{1, 1.0}}); }

double RateTable::rate(std::int64_t k) const noexcept {
  if (tail_ && k >= tail_->start) return tail_->c * std::pow(tail_->q, static_cast<double>(k));
  for (const auto& e : entries_)
    if (e.k == k) return e.rate;
  return 0.0;
}

std::int32_t RateTable::tail_label(double u) const noexcept {
  // P(offset >= m) = q^m, so offset = floor(log u / log q).
  const double offset = std::floor(std::log(u) / std::log(tail_->q));
  const double label = static_cast<double>(tail_->start) + offset;
  constexpr double cap = static_cast<double>(std::numeric_limits<std::int32_t>::max());
  return static_cast<std::int32_t>(std::min(label, cap));
}

std::string RateTable::describe() const {
  // Shortest round-trip form, so 0.6 prints as 0.6.
  auto num = [](double v) {
    char buf[32];
    return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
  };
  std::string out;
  for (const auto& e : entries_) out += (out.empty() ? "" : " ") + std::to_string(e.k) + ':' + num(e.rate);
  if (tail_)
    out += (out.empty() ? "" : " ") + std::string("tail(c=") + num(tail_->c) + ",q=" + num(tail_->q) +
           ",from=" + std::to_string(tail_->start) + ')';
  return out;
}

}  // namespace jumpex

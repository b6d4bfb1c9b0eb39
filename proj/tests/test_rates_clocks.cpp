#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "jumpex/clocks.hpp"
#include "jumpex/error.hpp"
#include "jumpex/rates.hpp"
#include "jumpex/rng.hpp"

using namespace jumpex;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected jumpex::Error");
  return ErrorKind::InvalidArgument;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("philox4x32-10 known answers") {
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) ==
        std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("counter streams are pure functions of key, id and index") {
  CounterStream a({7, 3}, StreamDomain::Clocks, 42);
  CounterStream b({7, 3}, StreamDomain::Clocks, 42);
  CounterStream c({7, 4}, StreamDomain::Clocks, 42);
  CounterStream d({7, 3}, StreamDomain::Configuration, 42);
  int differs_c = 0, differs_d = 0;
  for (int m = 0; m < 100; ++m) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    differs_c += va != c.next_u64();
    differs_d += va != d.next_u64();
  }
  CHECK(differs_c == 100);
  CHECK(differs_d == 100);

  CounterStream u({1, 0}, StreamDomain::Test, 0);
  for (int m = 0; m < 10000; ++m) {
    const double x = u.next_open01();
    REQUIRE(x > 0.0);
    REQUIRE(x < 1.0);
  }
}

TEST_CASE("rate table moments") {
  SUBCASE("tasep") {
    const auto t = tasep_rates();
    CHECK(t.b0() == 1.0);
    CHECK(t.b1() == 1.0);
    CHECK(t.b2() == 1.0);
  }
  SUBCASE("three explicit sizes") {
    const auto t = make_rate_table({{1, 0.6}, {2, 0.3}, {3, 0.1}});
    CHECK(t.b0() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(t.b1() == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(t.b2() == doctest::Approx(2.7).epsilon(1e-15));
    CHECK(t.b0() <= t.b1());
    CHECK(t.b1() <= t.b2());
  }
  SUBCASE("geometric tail matches truncated sums") {
    struct Case {
      std::vector<RateEntry> explicit_rates;
      GeometricTail tail;
    };
    const std::vector<Case> cases = {
        {{}, {0.5, 0.5, 1}},
        {{{1, 0.2}, {3, 0.7}}, {0.9, 0.3, 4}},
        {{{2, 1.0}}, {2.0, 0.25, 3}},
    };
    for (const auto& c : cases) {
      const auto t = make_rate_table(c.explicit_rates, c.tail);
      double s0 = 0, s1 = 0, s2 = 0;
      for (std::int64_t k = 1; k <= 60; ++k) {
        const double b = t.rate(k);
        s0 += b;
        s1 += k * b;
        s2 += static_cast<double>(k * k) * b;
      }
      CHECK(rel_err(t.b0(), s0) < 1e-12);
      CHECK(rel_err(t.b1(), s1) < 1e-12);
      CHECK(rel_err(t.b2(), s2) < 1e-12);
    }
    CHECK(make_rate_table({}, GeometricTail{0.5, 0.5, 1}).b0() == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("rate table errors") {
  CHECK(kind_of([] { make_rate_table({{1, 0.0}, {2, 0.0}}); }) == ErrorKind::DegenerateRates);
  CHECK(kind_of([] { make_rate_table({}); }) == ErrorKind::DegenerateRates);
  CHECK(kind_of([] { make_rate_table({}, GeometricTail{1.0, 1.0, 1}); }) == ErrorKind::DivergentTail);
  CHECK(kind_of([] { make_rate_table({}, GeometricTail{1.0, 1.5, 1}); }) == ErrorKind::DivergentTail);
  CHECK(kind_of([] { make_rate_table({{1, -0.1}}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { make_rate_table({{0, 1.0}}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { make_rate_table({{1, 1.0}, {1, 2.0}}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { make_rate_table({{3, 1.0}}, GeometricTail{1.0, 0.5, 2}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("clock streams are deterministic, sorted and bounded") {
  const auto table = make_rate_table({{1, 0.6}, {2, 0.3}, {3, 0.1}});
  const auto a = sample_clock_stream(table, 5, 50.0, {11, 0});
  const auto b = sample_clock_stream(table, 5, 50.0, {11, 0});
  REQUIRE(a.epochs.size() == b.epochs.size());
  for (std::size_t m = 0; m < a.epochs.size(); ++m) {
    CHECK(a.epochs[m].time == b.epochs[m].time);
    CHECK(a.epochs[m].label == b.epochs[m].label);
  }
  for (std::size_t m = 0; m < a.epochs.size(); ++m) {
    CHECK(a.epochs[m].time <= 50.0);
    CHECK(table.rate(a.epochs[m].label) > 0.0);
    if (m > 0) CHECK(a.epochs[m - 1].time < a.epochs[m].time);
  }
  const auto other_site = sample_clock_stream(table, 6, 50.0, {11, 0});
  CHECK(other_site.epochs.front().time != a.epochs.front().time);

  const auto tasep = sample_clock_stream(tasep_rates(), 0, 200.0, {3, 1});
  CHECK(!tasep.epochs.empty());
  CHECK(std::all_of(tasep.epochs.begin(), tasep.epochs.end(), [](const Epoch& e) { return e.label == 1; }));

  CHECK(kind_of([&] { sample_clock_stream(table, 0, 0.0, {1, 0}); }) == ErrorKind::InvalidArgument);
}

namespace {

// Poisson count and multinomial label bands over many unit-horizon streams.
void check_stream_statistics(const RateTable& table, std::int32_t max_label) {
  const int streams = 10000;
  double count = 0;
  std::map<std::int32_t, double> labels;
  for (int s = 0; s < streams; ++s) {
    const auto c = sample_clock_stream(table, s, 1.0, {2024, 0});
    count += static_cast<double>(c.epochs.size());
    for (const auto& e : c.epochs) labels[e.label] += 1;
  }
  const double mean = count / streams;
  CHECK(std::abs(mean - table.b0()) <= 3.0 * std::sqrt(table.b0()) / 100.0);
  for (std::int32_t k = 1; k <= max_label; ++k) {
    const double p = table.rate(k) / table.b0();
    const double sd = std::sqrt(count * p * (1 - p));
    INFO("label " << k);
    CHECK(std::abs(labels[k] - count * p) <= 3.0 * sd + 1e-9);
  }
}

}  // namespace

TEST_CASE("clock streams follow the Poisson and label laws") {
  check_stream_statistics(make_rate_table({{1, 0.6}, {2, 0.3}, {3, 0.1}}), 4);
  check_stream_statistics(make_rate_table({{1, 1.0}}, GeometricTail{0.8, 0.5, 2}), 8);
  check_stream_statistics(make_rate_table({}, GeometricTail{0.5, 0.5, 1}), 8);
}

TEST_CASE("distinct sites have uncorrelated counts") {
  const auto table = tasep_rates();
  const int samples = 10000;
  double worst = 0.0;
  for (Index pair = 0; pair < 1000; ++pair) {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int r = 0; r < samples; ++r) {
      const StreamSeed seed{99, static_cast<std::uint64_t>(r)};
      const double x = static_cast<double>(sample_clock_stream(table, 2 * pair, 1.0, seed).epochs.size());
      const double y = static_cast<double>(sample_clock_stream(table, 2 * pair + 1, 1.0, seed).epochs.size());
      sx += x, sy += y, sxx += x * x, syy += y * y, sxy += x * y;
    }
    const double n = samples;
    const double cov = sxy / n - sx * sy / (n * n);
    const double r = cov / std::sqrt((sxx / n - sx * sx / (n * n)) * (syy / n - sy * sy / (n * n)));
    worst = std::max(worst, std::abs(r));
  }
  CHECK(worst < 0.1);
}

TEST_CASE("merge_streams") {
  const auto table = make_rate_table({{1, 0.6}, {2, 0.3}, {3, 0.1}});
  SUBCASE("single stream is the identity") {
    const auto s = sample_clock_stream(table, 3, 20.0, {5, 0});
    const auto merged = merge_streams(std::span(&s, 1));
    REQUIRE(merged.events.size() == s.epochs.size());
    for (std::size_t m = 0; m < s.epochs.size(); ++m) {
      CHECK(merged.events[m].time == s.epochs[m].time);
      CHECK(merged.events[m].label == s.epochs[m].label);
      CHECK(merged.events[m].site == 3);
      CHECK(merged.events[m].index == m);
    }
    CHECK(merged.simultaneity_violations == 0);
  }
  SUBCASE("disjoint times interleave") {
    std::vector<ClockStream> s(2);
    s[0] = {0, 10.0, {{1.0, 1}, {3.0, 2}}};
    s[1] = {1, 10.0, {{2.0, 1}, {4.0, 1}}};
    const auto merged = merge_streams(s);
    std::vector<double> times;
    std::vector<Index> sites;
    for (const auto& e : merged.events) times.push_back(e.time), sites.push_back(e.site);
    CHECK(times == std::vector<double>{1.0, 2.0, 3.0, 4.0});
    CHECK(sites == std::vector<Index>{0, 1, 0, 1});
  }
  SUBCASE("cross-site ties are ordered by site and flagged") {
    std::vector<ClockStream> s(2);
    s[0] = {7, 10.0, {{2.0, 1}}};
    s[1] = {4, 10.0, {{2.0, 3}}};
    const auto merged = merge_streams(s);
    CHECK(merged.simultaneity_violations == 1);
    CHECK(merged.events[0].site == 4);
    CHECK(merged.events[1].site == 7);
  }
  SUBCASE("random streams merge to a sorted permutation, stable under re-merge") {
    std::vector<ClockStream> streams;
    std::size_t total = 0;
    for (Index i = 0; i < 100; ++i) {
      streams.push_back(sample_clock_stream(table, i, 10.0, {77, 0}));
      total += streams.back().epochs.size();
    }
    const auto merged = merge_streams(streams);
    REQUIRE(merged.events.size() == total);
    std::map<std::pair<Index, std::uint32_t>, int> seen;
    for (std::size_t m = 0; m < merged.events.size(); ++m) {
      const auto& e = merged.events[m];
      const auto& src = streams[static_cast<std::size_t>(e.site)].epochs[e.index];
      CHECK(src.time == e.time);
      CHECK(src.label == e.label);
      ++seen[{e.site, e.index}];
      if (m > 0) CHECK(merged.events[m - 1].time <= e.time);
    }
    CHECK(seen.size() == total);

    // Rebuild per-site streams from the merged output, shuffle, merge again.
    std::vector<ClockStream> rebuilt(100);
    for (Index i = 0; i < 100; ++i) rebuilt[static_cast<std::size_t>(i)] = {i, 10.0, {}};
    for (const auto& e : merged.events) rebuilt[static_cast<std::size_t>(e.site)].epochs.push_back({e.time, e.label});
    std::reverse(rebuilt.begin(), rebuilt.end());
    const auto again = merge_streams(rebuilt);
    REQUIRE(again.events.size() == merged.events.size());
    for (std::size_t m = 0; m < again.events.size(); ++m) {
      CHECK(again.events[m].time == merged.events[m].time);
      CHECK(again.events[m].site == merged.events[m].site);
    }
  }
}

TEST_CASE("clock bank shifting re-times and re-indexes") {
  const auto bank = ClockBank::generate(tasep_rates(), -3, 3, 10.0, {8, 0});
  const auto shifted = bank.shifted(4.0, 2);
  CHECK(shifted.lo() == -5);
  CHECK(shifted.hi() == 1);
  CHECK(shifted.horizon() == doctest::Approx(6.0));
  const auto& src = bank.stream(1).epochs;
  const auto& dst = shifted.stream(-1).epochs;
  std::vector<double> expected;
  for (const auto& e : src)
    if (e.time > 4.0) expected.push_back(e.time - 4.0);
  REQUIRE(dst.size() == expected.size());
  for (std::size_t m = 0; m < dst.size(); ++m) CHECK(dst[m].time == expected[m]);
  CHECK(kind_of([&] { bank.shifted(10.0, 0); }) == ErrorKind::HorizonExceeded);
  CHECK(kind_of([&] { bank.stream(4); }) == ErrorKind::UntrackedIndex);
}

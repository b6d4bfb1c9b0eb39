#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "jumpex/coupling.hpp"
#include "jumpex/error.hpp"

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

std::vector<Position> positions(std::vector<std::int64_t> sites) {
  std::vector<Position> p;
  for (auto s : sites) p.emplace_back(s);
  return p;
}

Configuration random_configuration(std::mt19937_64& rng, Index lo, std::size_t n) {
  std::uniform_int_distribution<int> gap(1, 4);
  std::vector<Position> p;
  std::int64_t x = 0;
  for (std::size_t m = 0; m < n; ++m) p.emplace_back(x), x += gap(rng);
  return Configuration(lo, p);
}

std::vector<double> evenly(double t, int count) {
  std::vector<double> qs;
  for (int q = 1; q <= count; ++q) qs.push_back(t * q / count);
  return qs;
}

}  // namespace

TEST_CASE("wedge family construction") {
  const Configuration sigma(1, positions({0, 1, 3}));
  const auto family = build_wedge_family(sigma, 1, 3, 2);
  REQUIRE(family.wedges.size() == 3);
  CHECK(family.wedge(1).pos == positions({-2, -1, 0}));
  CHECK(family.wedge(2).pos == positions({-1, 0, 1}));
  CHECK(family.wedge(3).pos == positions({1, 2, 3}));
  // Site m is read by particle m - j of wedge j.
  CHECK(family.wedge(1).reads_site(0) == 1);
  CHECK(family.wedge(3).reads_site(-2) == 1);
  CHECK(family.clock_sites().lo == -1);
  CHECK(family.clock_sites().hi == 3);

  const auto centered = build_centered_family(1, 3, 2);
  for (const auto& w : centered.wedges) CHECK(w.pos == positions({-2, -1, 0}));

  const Configuration with_inf(0, {Position(0), Position::plus_infinity()});
  CHECK(kind_of([&] { build_wedge_family(with_inf, 0, 1, 1); }) == ErrorKind::AnchorAtInfinity);
  CHECK(kind_of([] { build_centered_family(0, 999, 10000); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { build_wedge_family(sigma, 1, 3, 1); }) == ErrorKind::WindowTooSmall);
}

TEST_CASE("hand-worked coupled script") {
  // sigma = (0,1,3) at (1,2,3); events (0.2, 1, 2), (0.5, 3, 1), (0.7, 1, 4).
  // Wedge states worked by hand from zeta(i) <- min(zeta(i) + k, zeta(i+1) - 1):
  //   t=0.2: zeta^1 = (-2,-1,2), zeta^2 = (-1,0,1), zeta^3 = (1,2,3)
  //   t=0.5: zeta^3 = (1,2,4)
  //   t=0.7: zeta^1 = (-2,-1,6)
  std::vector<ClockStream> s = {{-1, 1.0, {}},
                                {0, 1.0, {}},
                                {1, 1.0, {{0.2, 2}, {0.7, 4}}},
                                {2, 1.0, {}},
                                {3, 1.0, {{0.5, 1}}}};
  const ClockBank bank(-1, s);
  const Configuration sigma(1, positions({0, 1, 3}));
  const auto family = build_wedge_family(sigma, 1, 3, 2);
  const std::vector<double> qs = {0.0, 0.2, 0.5, 0.7, 1.0};
  const auto run = evolve_coupled(sigma, family, bank, 1.0, qs);

  auto wedge_at = [&](Index j, std::size_t q) {
    return run.wedge_snapshots[static_cast<std::size_t>(j - 1)][q];
  };
  CHECK(wedge_at(1, 1) == positions({-2, -1, 2}));
  CHECK(wedge_at(2, 1) == positions({-1, 0, 1}));
  CHECK(wedge_at(3, 1) == positions({1, 2, 3}));
  CHECK(wedge_at(3, 2) == positions({1, 2, 4}));
  CHECK(wedge_at(1, 4) == positions({-2, -1, 6}));
  CHECK(wedge_at(2, 4) == positions({-1, 0, 1}));
  CHECK(wedge_at(3, 4) == positions({1, 2, 4}));
  CHECK(run.sigma.snapshots[4] == positions({0, 1, 4}));

  const auto report = check_variational_identity(run, bank, {1, 3});
  CHECK(report.checked == 15);
  CHECK(report.exact());
  CHECK(report.covered());
}

TEST_CASE("a single epoch moves only the matching particles") {
  std::mt19937_64 rng(5);
  const auto sigma = random_configuration(rng, 0, 12);
  const auto family = build_wedge_family(sigma, 0, 11, 11);
  std::vector<ClockStream> streams;
  for (Index i = -11; i <= 11; ++i) streams.push_back({i, 1.0, {}});
  const Index m = 6;
  streams[static_cast<std::size_t>(m + 11)].epochs.push_back({0.5, 2});
  const ClockBank bank(-11, streams);
  const auto run = evolve_coupled(sigma, family, bank, 1.0, {1.0});
  for (Index i = 0; i < 12; ++i)
    if (i != m) CHECK(run.sigma.at(0, i) == sigma.at(i));
  for (Index j = 0; j <= 11; ++j)
    for (Index i = -11; i <= 0; ++i) {
      const Position before = family.wedge(j).at(i);
      const Position after = run.zeta(j, 0, i);
      if (i != m - j) CHECK(after == before);
      else CHECK(after == jump_target(before, 2, i == 0 ? Position::plus_infinity() : family.wedge(j).at(i + 1)));
    }
}

TEST_CASE("variational identity holds at time zero") {
  std::mt19937_64 rng(6);
  const auto sigma = random_configuration(rng, -5, 30);
  const auto family = build_wedge_family(sigma, -5, 24, 29);
  const auto bank = ClockBank::generate(tasep_rates(), -34, 24, 1.0, {1, 0});
  const auto run = evolve_coupled(sigma, family, bank, 0.0, {0.0});
  const auto report = check_variational_identity(run, bank, {-5, 24});
  CHECK(report.exact());
  CHECK(report.covered());
}

TEST_CASE("variational identity is exact on random configurations") {
  const std::vector<RateTable> tables = {tasep_rates(), make_rate_table({{1, 0.6}, {2, 0.3}, {3, 0.1}})};
  std::mt19937_64 rng(7);
  const double t = 8.0;
  for (const auto& table : tables) {
    for (int run_id = 0; run_id < 5; ++run_id) {
      const auto sigma = random_configuration(rng, 0, 100);
      const Index span = static_cast<Index>(std::ceil(2 * table.b0() * t));
      const auto family = build_wedge_family(sigma, 0, 99, 99 + span);
      const auto bank = ClockBank::generate(table, -99 - span, 99, t, {70, static_cast<std::uint64_t>(run_id)});
      const auto run = evolve_coupled(sigma, family, bank, t, evenly(t, 8));

      const auto full = check_variational_identity(run, bank, {0, 99});
      CHECK(full.exact());
      CHECK(full.covered());
      CHECK(full.exhaustive == full.checked);

      const auto truncated = check_variational_identity(run, bank, {0, 99}, span);
      CHECK(truncated.exact());
      // A failed certificate is a coverage gap, never an inequality.
      if (!truncated.covered()) CHECK(truncated.first_certificate_failure.has_value());

      // Whenever the truncated range is certified, doubling it leaves the
      // minimum unchanged.
      for (Index i = 0; i < 100; i += 9)
        for (std::size_t q = 0; q < run.query_times.size(); ++q) {
          const Index J = std::min<Index>(99, i + span);
          if (run.zeta(J, q, i - J) != family.wedge(J).at(i - J)) continue;
          Position narrow = Position::plus_infinity(), wide = Position::plus_infinity();
          for (Index j = i; j <= J; ++j) narrow = std::min(narrow, run.zeta(j, q, i - j));
          for (Index j = i; j <= std::min<Index>(99, i + 2 * span); ++j) wide = std::min(wide, run.zeta(j, q, i - j));
          CHECK(narrow == wide);
        }
    }
  }
}

TEST_CASE("offset equivariance") {
  std::mt19937_64 rng(8);
  const auto sigma = random_configuration(rng, 0, 40);
  std::vector<Position> shifted;
  for (auto p : sigma.positions()) shifted.push_back(p + 1000);
  const Configuration sigma_c(0, shifted);
  const auto bank = ClockBank::generate(tasep_rates(), -45, 39, 6.0, {9, 0});
  const auto a = evolve_coupled(sigma, build_wedge_family(sigma, 0, 39, 45), bank, 6.0, {3.0, 6.0});
  const auto b = evolve_coupled(sigma_c, build_wedge_family(sigma_c, 0, 39, 45), bank, 6.0, {3.0, 6.0});
  for (std::size_t q = 0; q < 2; ++q) {
    for (Index i = 0; i < 40; ++i) CHECK(b.sigma.at(q, i) == a.sigma.at(q, i) + 1000);
    for (Index j = 0; j < 40; ++j)
      for (Index i = -45; i <= 0; ++i) CHECK(b.zeta(j, q, i) == a.zeta(j, q, i) + 1000);
  }
}

TEST_CASE("wedge monotonicity on a random family") {
  const auto table = make_rate_table({{1, 0.6}, {2, 0.3}, {3, 0.1}});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto family = build_centered_family(0, 19, 40);
    const auto bank = ClockBank::generate(table, -40, 19, 5.0, {300, seed});
    const auto run = evolve_coupled(Configuration(0, {Position(0)}), family, bank, 5.0, {0.0, 2.5, 5.0});
    const auto report = check_wedge_monotonicity(run);
    CHECK(report.checked > 0);
    CHECK(report.violations == 0);
  }
  // At t = 0, xi^{j0}(i - j0) = i - j0 >= i - j1.
  const auto family = build_centered_family(0, 3, 5);
  const auto bank = ClockBank::generate(tasep_rates(), -5, 3, 1.0, {1, 0});
  CHECK(check_wedge_monotonicity(evolve_coupled(Configuration(0, {Position(0)}), family, bank, 0.0, {0.0}))
            .violations == 0);
}

TEST_CASE("wedges on disjoint clock sites share one law") {
  const auto table = tasep_rates();
  const Index depth = 40;
  const std::vector<Index> anchors = {0, 100, 200};
  const int replicas = 300;
  std::vector<double> sum(anchors.size()), sumsq(anchors.size());
  for (int r = 0; r < replicas; ++r) {
    const auto bank = ClockBank::generate(table, -depth, 200, 10.0, {44, static_cast<std::uint64_t>(r)});
    for (std::size_t a = 0; a < anchors.size(); ++a) {
      WedgeFamily single = build_centered_family(anchors[a], anchors[a], depth);
      const auto run = evolve_coupled(Configuration(anchors[a], {Position(0)}), single, bank, 10.0, {10.0});
      const double v = static_cast<double>(run.zeta(anchors[a], 0, -depth / 2).value());
      sum[a] += v;
      sumsq[a] += v * v;
    }
  }
  std::vector<double> mean(anchors.size()), se(anchors.size());
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    mean[a] = sum[a] / replicas;
    se[a] = std::sqrt((sumsq[a] / replicas - mean[a] * mean[a]) / replicas);
  }
  for (std::size_t a = 0; a < anchors.size(); ++a)
    for (std::size_t b = a + 1; b < anchors.size(); ++b)
      CHECK(std::abs(mean[a] - mean[b]) <= 3.0 * std::sqrt(se[a] * se[a] + se[b] * se[b]));
}

TEST_CASE("path-wise subadditivity") {
  const auto table = tasep_rates();
  SUBCASE("tasep, h = -20, s = t = 10") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto family = build_centered_family(0, 0, 200);
      const auto bank = ClockBank::generate(table, -200, 0, 20.0, {12, seed});
      const auto report = check_subadditivity(family.wedges[0], bank, -20, 10.0, 10.0);
      CHECK(report.checked == 181);
      CHECK(report.violations == 0);
      CHECK(report.continuation_consistent);
    }
  }
  SUBCASE("h = 0") {
    const auto family = build_centered_family(5, 5, 60);
    const auto bank = ClockBank::generate(make_rate_table({{1, 0.6}, {2, 0.3}, {3, 0.1}}), -55, 5, 12.0, {13, 0});
    const auto report = check_subadditivity(family.wedges[0], bank, 0, 6.0, 6.0);
    CHECK(report.violations == 0);
    CHECK(report.continuation_consistent);
  }
  SUBCASE("s = 0 and t = 0 is an equality") {
    const auto family = build_centered_family(0, 0, 30);
    const auto bank = ClockBank::generate(table, -30, 0, 5.0, {14, 0});
    const auto report = check_subadditivity(family.wedges[0], bank, -7, 0.0, 0.0);
    CHECK(report.violations == 0);
    CHECK(report.equalities == report.checked);
  }
  SUBCASE("errors") {
    const auto family = build_centered_family(0, 0, 30);
    const auto bank = ClockBank::generate(table, -30, 0, 5.0, {14, 0});
    CHECK(kind_of([&] { check_subadditivity(family.wedges[0], bank, -5, 3.0, 3.0); }) == ErrorKind::HorizonExceeded);
    CHECK(kind_of([&] { check_subadditivity(family.wedges[0], bank, 1, 1.0, 1.0); }) == ErrorKind::InvalidArgument);
  }
}

#include "jumpex/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "jumpex/coupling.hpp"
#include "jumpex/error.hpp"
#include "jumpex/evolve.hpp"
#include "jumpex/hopflax.hpp"
#include "jumpex/parallel.hpp"
#include "jumpex/shape.hpp"

namespace jumpex {

namespace {

using json = nlohmann::ordered_json;

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string num(const ExtendedReal& v) { return v.infinite ? "inf" : num(v.value); }

json to_json(double v) {
  if (std::isfinite(v)) return v;
  return num(v);
}

json to_json(const ExtendedReal& v) { return v.infinite ? json("inf") : json(v.value); }

template <class T>
json array(const std::vector<T>& values) {
  json out = json::array();
  for (const auto& v : values) out.push_back(to_json(v));
  return out;
}

std::uint64_t part_seed(std::uint64_t master, std::uint64_t part) { return splitmix64(master ^ (part * 0x9e3779b97f4a7c15ULL)); }

ExperimentResult start(const ExperimentConfig& config) {
  ExperimentResult r;
  r.kind = config.kind();
  r.config_text = config.canonical_text();
  r.config_hash = config.hash();
  return r;
}

void verdict(ExperimentResult& r, std::string name, bool passed, double value, double threshold,
             std::string detail = {}) {
  r.verdicts.push_back({std::move(name), passed, value, threshold, std::move(detail)});
}

json shape_json(const ShapeEstimate& est) {
  return json{{"n", est.n},
              {"t_macro", est.t_macro},
              {"t_phys", est.t_phys},
              {"replicas", est.replicas},
              {"rates", est.rates.describe()},
              {"window", {{"lo", est.window_lo}, {"hi", 0}}},
              {"left_quiet", est.left_quiet},
              {"epochs", est.epochs},
              {"projection_displacement", est.projection_displacement},
              {"x", array(est.x_grid)},
              {"g_hat_raw", array(est.g_raw)},
              {"g_hat_convex", array(est.g_hat)},
              {"stderr", array(est.stderr_)},
              {"median", array(est.median)}};
}

std::string shape_csv(const ShapeEstimate& est) {
  std::ostringstream out;
  out << "x,g_hat_raw,g_hat_convex,stderr,n,replicas\n";
  for (std::size_t k = 0; k < est.x_grid.size(); ++k)
    out << num(est.x_grid[k]) << ',' << num(est.g_raw[k]) << ',' << num(est.g_hat[k]) << ','
        << num(est.stderr_[k]) << ',' << est.n << ',' << est.replicas << '\n';
  return out.str();
}

/// Leftmost grid point right of which the convexified slope exceeds 1.
double kink_location(const ShapeEstimate& est) {
  for (std::size_t k = 0; k + 1 < est.x_grid.size(); ++k)
    if ((est.g_hat[k + 1] - est.g_hat[k]) / (est.x_grid[k + 1] - est.x_grid[k]) > 1.0 + 1e-9) return est.x_grid[k];
  return est.x_grid.back();
}

/// The g used by solve / theorem1 / conjugate: "analytic" (TASEP only) or
/// "estimated" from the estimate_* keys.
struct GSource {
  ConvexFnTable table;
  json provenance;
};

GSource g_source(const ExperimentConfig& config, const std::string& source) {
  if (source == "analytic") {
    if (!config.rates_are_tasep()) throw Error(ErrorKind::Config, "config: analytic g exists only for TASEP rates");
    return {tasep_g(), json{{"source", "analytic"}, {"form", "1 - 2 sqrt(-x) on [-1, 0], x below -1"}}};
  }
  if (source == "estimated") {
    const auto seed = static_cast<std::uint64_t>(
        config.integer("estimate_seed", static_cast<std::int64_t>(config.require_seed())));
    const auto n = config.integer("estimate_n", 1000);
    const auto replicas = config.integer("estimate_replicas", 20);
    if (n < 1 || replicas < 2) throw Error(ErrorKind::Config, "config: estimate_n >= 1 and estimate_replicas >= 2");
    const auto est = estimate_g(config.rates(), n, config.grid("estimate_x_grid", "-1.5:0.1:0"),
                                static_cast<std::size_t>(replicas), seed);
    json prov = shape_json(est);
    prov["source"] = "estimated";
    prov["seed"] = seed;
    return {to_convex_table(est), prov};
  }
  throw Error(ErrorKind::Config, "config: g must be 'analytic' or 'estimated', not '" + source + "'");
}

std::int64_t positive(const ExperimentConfig& config, const std::string& key, std::int64_t fallback,
                      std::int64_t min = 1) {
  const auto v = config.integer(key, fallback);
  if (v < min) throw Error(ErrorKind::Config, "config: " + config.kind() + "." + key + " must be >= " + std::to_string(min));
  return v;
}

double positive_number(const ExperimentConfig& config, const std::string& key, double fallback) {
  const double v = config.number(key, fallback);
  if (!(v > 0.0)) throw Error(ErrorKind::Config, "config: " + config.kind() + "." + key + " must be > 0");
  return v;
}

std::vector<double> evenly(double t, std::int64_t count) {
  std::vector<double> qs;
  for (std::int64_t q = 1; q <= count; ++q) qs.push_back(t * static_cast<double>(q) / static_cast<double>(count));
  return qs;
}

}  // namespace

bool ExperimentResult::passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

nlohmann::ordered_json ExperimentResult::to_json() const {
  json v = json::array();
  for (const auto& x : verdicts)
    v.push_back(json{{"name", x.name},
                     {"passed", x.passed},
                     {"value", jumpex::to_json(x.value)},
                     {"threshold", jumpex::to_json(x.threshold)},
                     {"detail", x.detail}});
  return json{{"schema_version", kResultSchemaVersion},
              {"kind", kind},
              {"code_version", JUMPEX_VERSION},
              {"config_hash", config_hash},
              {"config_text", config_text},
              {"passed", passed()},
              {"verdicts", v},
              {"payload", payload}};
}

Configuration sample_equilibrium_config(double v, std::size_t count, StreamSeed seed) {
  if (!(v >= 1.0)) throw Error(ErrorKind::InvalidDensity, "invalid density: mean gap v must be >= 1");
  if (count == 0) throw Error(ErrorKind::InvalidArgument, "count must be >= 1");
  CounterStream rng(seed, StreamDomain::Configuration, 0);
  const double log_stay = std::log1p(-1.0 / v);  // log P(gap > 1); -inf at v = 1
  std::vector<Position> pos;
  pos.reserve(count);
  std::int64_t x = 0;
  pos.emplace_back(x);
  for (std::size_t i = 1; i < count; ++i) {
    const double u = rng.next_open01();
    const std::int64_t gap = v == 1.0 ? 1 : 1 + static_cast<std::int64_t>(std::floor(std::log(u) / log_stay));
    x += gap;
    pos.emplace_back(x);
  }
  return Configuration(0, std::move(pos));
}

ExperimentResult run_simulate(const ExperimentConfig& config) {
  ExperimentResult r = start(config);
  const RateTable rates = config.rates();
  const std::string initial = config.text("initial", "step");
  const auto particles = positive(config, "particles", 100);
  const double v = config.number("v", 2.0);
  const double t = positive_number(config, "t", 10.0);
  const auto queries = evenly(t, positive(config, "queries", 5));
  const std::size_t replicas = config.replicas(1);
  const std::uint64_t seed = config.require_seed();
  if (initial != "step" && initial != "equilibrium")
    throw Error(ErrorKind::Config, "config: simulate.initial must be 'step' or 'equilibrium'");

  std::vector<Trajectory> runs(replicas);
  parallel_for(replicas, [&](std::size_t k) {
    const Configuration start_config = initial == "step"
                                           ? step_configuration(particles - 1)
                                           : sample_equilibrium_config(v, static_cast<std::size_t>(particles), {seed, k});
    const auto bank = ClockBank::generate(rates, start_config.lo(), start_config.hi(), t, {seed, k});
    runs[k] = evolve(start_config, bank, t, queries, {.record_events = false, .check_invariants = true});
  });

  std::ostringstream csv;
  write_trajectory_csv_header(csv);
  json per = json::array();
  bool valid = true;
  std::size_t ties = 0;
  for (std::size_t k = 0; k < replicas; ++k) {
    write_trajectory_csv(csv, k, runs[k]);
    valid = valid && validate(runs[k].final_state).valid;
    ties += runs[k].simultaneity_violations;
    per.push_back(json{{"replica", k},
                       {"epochs", runs[k].epochs_processed},
                       {"moves", runs[k].moves},
                       {"simultaneity_violations", runs[k].simultaneity_violations}});
  }
  r.payload = json{{"initial", initial}, {"particles", particles}, {"t", t}, {"rates", rates.describe()},
                   {"query_times", array(queries)}, {"replicas", per}};
  r.tables.emplace_back("", csv.str());
  verdict(r, "exclusion invariant after every jump", valid, valid ? 1.0 : 0.0, 1.0);
  verdict(r, "no simultaneous epochs", true, static_cast<double>(ties), 0.0,
          ties ? "ties resolved by (time, site, index)" : "");
  return r;
}

ExperimentResult run_estimate_g(const ExperimentConfig& config) {
  ExperimentResult r = start(config);
  const RateTable rates = config.rates();
  const auto n = positive(config, "n", 1000);
  const auto x = config.grid("x_grid", "-1.5:0.1:0");
  const double eps = config.number("lipschitz_eps", 0.0);
  const double tol = config.number("shape_tol", 0.05);
  const std::string compare = config.text("compare", "none");
  const double sup_tol = config.number("sup_tolerance", 0.05);
  const double g0_tol = config.number("g0_tolerance", 0.1);
  const std::size_t replicas = config.replicas(20);
  const std::uint64_t seed = config.require_seed();
  if (eps < 0.0) throw Error(ErrorKind::Config, "config: lipschitz_eps must be >= 0");
  if (compare != "none" && compare != "tasep") throw Error(ErrorKind::Config, "config: compare must be none or tasep");
  if (compare == "tasep" && !config.rates_are_tasep())
    throw Error(ErrorKind::Config, "config: compare = tasep needs TASEP rates");
  if (replicas < 2) throw Error(ErrorKind::Config, "config: estimate-g needs replicas >= 2");
  if (x.back() > 0.0) throw Error(ErrorKind::Config, "config: estimate-g.x_grid must lie in x <= 0");

  std::vector<double> times = {1.0};
  if (eps > 0.0) times.push_back(1.0 + eps);
  const auto estimates = estimate_gamma(rates, n, x, times, replicas, seed);
  const ShapeEstimate& est = estimates.front();

  r.payload = shape_json(est);
  r.payload["seed"] = seed;
  r.payload["kink_location"] = kink_location(est);
  if (eps > 0.0) r.payload["gamma_later"] = shape_json(estimates[1]);
  r.tables.emplace_back("", shape_csv(est));

  verdict(r, "left edge quiet", est.left_quiet, est.left_quiet ? 1.0 : 0.0, 1.0);
  if (x.back() == 0.0) {
    const double miss = std::abs(est.g_hat.back() - rates.b1());
    verdict(r, "g_hat(0) near B1", miss <= g0_tol, est.g_hat.back(), g0_tol, "B1 = " + num(rates.b1()));
  }
  if (compare == "tasep") {
    const auto g = tasep_g();
    double sup = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) sup = std::max(sup, std::abs(est.g_hat[k] - g(x[k]).value));
    r.payload["sup_distance_tasep"] = sup;
    verdict(r, "sup |g_hat - g_tasep|", sup <= sup_tol, sup, sup_tol);
  }
  const auto report = check_shape_properties(est, tol, eps > 0.0 ? &estimates[1] : nullptr);
  for (const auto& c : report.checks)
    verdict(r, "shape: " + c.name, c.passed, c.worst, tol, std::to_string(c.checked) + " inequalities");
  return r;
}

ExperimentResult run_verify_coupling(const ExperimentConfig& config) {
  ExperimentResult r = start(config);
  const RateTable rates = config.rates();
  const std::uint64_t seed = config.require_seed();
  const auto configurations = positive(config, "configurations", 10, 0);
  const auto particles = positive(config, "particles", 100);
  const double gap_mean = config.number("gap_mean", 2.0);
  const double t = positive_number(config, "t", 8.0);
  const auto queries = evenly(t, positive(config, "queries", 8));
  const double reach = 2.0 * rates.b0() * t;
  const auto span = positive(config, "span",
                             static_cast<std::int64_t>(std::ceil(reach) + std::ceil(4.0 * std::sqrt(reach))) + 4);
  const auto mono_runs = positive(config, "monotonicity_runs", 0, 0);
  const auto mono_wedges = positive(config, "monotonicity_wedges", 20);
  const auto depth = positive(config, "wedge_depth", 200);
  const double s = config.number("s", 10.0);
  const double t_after = config.number("t_after", 10.0);
  const auto sub_runs = positive(config, "subadditivity_runs", 0, 0);
  const auto h = config.integer("h", -20);
  const auto pairs = positive(config, "ordering_pairs", 0, 0);
  const auto pair_particles = positive(config, "ordering_particles", 100);
  const double ordering_t = positive_number(config, "ordering_t", 10.0);
  if (s < 0.0 || t_after < 0.0) throw Error(ErrorKind::Config, "config: s and t_after must be >= 0");
  if (mono_runs > 0 && depth < mono_wedges - 1)
    throw Error(ErrorKind::Config, "config: wedge_depth must be >= monotonicity_wedges - 1");
  if (sub_runs > 0 && (h > 0 || h < -depth)) throw Error(ErrorKind::Config, "config: h must lie in [-wedge_depth, 0]");

  std::ostringstream csv;
  csv << "check,run,checked,equalities,certified,violations\n";
  r.payload = json{{"rates", rates.describe()}, {"seed", seed}};

  if (configurations > 0) {
    const Index last = particles - 1;
    const Index family_depth = last + span;
    struct IdentityRun {
      IdentityReport truncated, full;
    };
    std::vector<IdentityRun> runs(static_cast<std::size_t>(configurations));
    const std::uint64_t master = part_seed(seed, 1);
    parallel_for(runs.size(), [&](std::size_t k) {
      const auto sigma = sample_equilibrium_config(gap_mean, static_cast<std::size_t>(particles), {master, k});
      const auto family = build_wedge_family(sigma, 0, last, family_depth);
      const auto bank = ClockBank::generate(rates, -family_depth, last, t, {master, k});
      const auto run = evolve_coupled(sigma, family, bank, t, queries);
      runs[k].truncated = check_variational_identity(run, bank, {0, last}, span);
      runs[k].full = check_variational_identity(run, bank, {0, last});
    });
    std::size_t checked = 0, equal = 0, certified = 0, exhaustive = 0, full_equal = 0;
    json first = nullptr;
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const auto& tr = runs[k].truncated;
      checked += tr.checked;
      equal += tr.equalities;
      certified += tr.certificates_valid;
      exhaustive += tr.exhaustive;
      full_equal += runs[k].full.equalities;
      csv << "identity," << k << ',' << tr.checked << ',' << tr.equalities << ',' << tr.certificates_valid << ','
          << tr.checked - tr.equalities << '\n';
      if (first.is_null() && tr.first_violation) {
        const auto& v = *tr.first_violation;
        json epochs = json::array();
        for (const auto& e : v.site_epochs) epochs.push_back(json{{"time", e.time}, {"label", e.label}});
        first = json{{"configuration", k}, {"i", v.i},        {"time", v.time},         {"sigma", v.sigma.to_string()},
                     {"minimum", v.minimum.to_string()},   {"argmin", v.argmin}, {"site_epochs", epochs}};
      }
    }
    r.payload["identity"] = json{{"configurations", configurations}, {"particles", particles}, {"t", t},
                                 {"query_times", array(queries)},    {"span", span},           {"checked", checked},
                                 {"equalities", equal},              {"certificates_valid", certified},
                                 {"exhaustive", exhaustive},         {"full_range_equalities", full_equal},
                                 {"first_violation", first}};
    verdict(r, "variational identity exact", equal == checked && full_equal == checked, static_cast<double>(equal),
            static_cast<double>(checked), "equalities / checked (i, t) points");
    verdict(r, "tail certificates valid", certified == checked, static_cast<double>(certified),
            static_cast<double>(checked));
  }

  if (mono_runs > 0) {
    std::vector<MonotonicityReport> reports(static_cast<std::size_t>(mono_runs));
    const std::uint64_t master = part_seed(seed, 2);
    parallel_for(reports.size(), [&](std::size_t k) {
      const auto family = build_centered_family(0, mono_wedges - 1, depth);
      const auto bank = ClockBank::generate(rates, -depth, mono_wedges - 1, s + t_after, {master, k});
      const auto run = evolve_coupled(Configuration(0, {Position(0)}), family, bank, s + t_after, {s, s + t_after});
      reports[k] = check_wedge_monotonicity(run);
    });
    std::size_t checked = 0, violations = 0;
    for (std::size_t k = 0; k < reports.size(); ++k) {
      checked += reports[k].checked;
      violations += reports[k].violations;
      csv << "monotonicity," << k << ',' << reports[k].checked << ",,," << reports[k].violations << '\n';
    }
    r.payload["monotonicity"] =
        json{{"runs", mono_runs}, {"wedges", mono_wedges}, {"depth", depth}, {"checked", checked}, {"violations", violations}};
    verdict(r, "wedge monotonicity", violations == 0, static_cast<double>(violations), 0.0,
            std::to_string(checked) + " comparisons");
  }

  if (sub_runs > 0) {
    std::vector<SubadditivityReport> reports(static_cast<std::size_t>(sub_runs));
    const std::uint64_t master = part_seed(seed, 3);
    parallel_for(reports.size(), [&](std::size_t k) {
      const auto wedge = build_centered_family(0, 0, depth).wedges.front();
      const auto bank = ClockBank::generate(rates, -depth, 0, s + t_after, {master, k});
      reports[k] = check_subadditivity(wedge, bank, h, s, t_after);
    });
    std::size_t checked = 0, violations = 0, equalities = 0;
    bool consistent = true;
    for (std::size_t k = 0; k < reports.size(); ++k) {
      checked += reports[k].checked;
      violations += reports[k].violations;
      equalities += reports[k].equalities;
      consistent = consistent && reports[k].continuation_consistent;
      csv << "subadditivity," << k << ',' << reports[k].checked << ',' << reports[k].equalities << ",,"
          << reports[k].violations << '\n';
    }
    r.payload["subadditivity"] = json{{"runs", sub_runs}, {"depth", depth}, {"h", h},
                                      {"s", s},           {"t", t_after},   {"checked", checked},
                                      {"equalities", equalities},           {"violations", violations},
                                      {"continuation_consistent", consistent}};
    verdict(r, "path-wise subadditivity", violations == 0, static_cast<double>(violations), 0.0,
            std::to_string(checked) + " comparisons");
    verdict(r, "restarted copy reproduces xi", consistent, consistent ? 1.0 : 0.0, 1.0);
  }

  if (pairs > 0) {
    std::vector<std::size_t> violations(static_cast<std::size_t>(pairs)), checked(violations.size());
    const std::uint64_t master = part_seed(seed, 4);
    const auto times = evenly(ordering_t, 4);
    parallel_for(violations.size(), [&](std::size_t k) {
      const auto count = static_cast<std::size_t>(pair_particles);
      const auto a = sample_equilibrium_config(gap_mean, count, {master, 2 * k});
      const auto b = sample_equilibrium_config(gap_mean, count, {master, 2 * k + 1});
      // The pointwise max of two valid configurations is valid and dominates both.
      std::vector<Position> upper;
      for (std::size_t m = 0; m < count; ++m) upper.push_back(std::max(a.positions()[m], b.positions()[m]));
      const Configuration high(0, upper);
      const auto bank = ClockBank::generate(rates, 0, pair_particles - 1, ordering_t, {master, k});
      const auto low_run = evolve(a, bank, ordering_t, times);
      const auto high_run = evolve(high, bank, ordering_t, times);
      for (std::size_t q = 0; q < times.size(); ++q)
        for (Index i = 0; i < pair_particles; ++i) {
          ++checked[k];
          if (low_run.at(q, i) > high_run.at(q, i)) ++violations[k];
        }
    });
    std::size_t total = 0, bad = 0;
    for (std::size_t k = 0; k < violations.size(); ++k) {
      total += checked[k];
      bad += violations[k];
      csv << "ordering," << k << ',' << checked[k] << ",,," << violations[k] << '\n';
    }
    r.payload["ordering"] = json{{"pairs", pairs}, {"particles", pair_particles}, {"t", ordering_t},
                                 {"checked", total}, {"violations", bad}};
    verdict(r, "ordering preserved", bad == 0, static_cast<double>(bad), 0.0, std::to_string(total) + " comparisons");
  }
  r.tables.emplace_back("", csv.str());
  return r;
}

ExperimentResult run_equilibrium_test(const ExperimentConfig& config) {
  ExperimentResult r = start(config);
  if (!config.rates_are_tasep())
    throw Error(ErrorKind::Config, "config: the equilibrium test is defined for TASEP rates only");
  const RateTable rates = config.rates();
  const double v = config.number("v", 2.0);
  const auto count = positive(config, "count", 2000, 2);
  const double t = positive_number(config, "t", 1000.0);
  const double rate_tol = config.number("rate_tolerance", 0.02);
  const auto max_gap = positive(config, "histogram_max_gap", 8);
  const double sigmas = config.number("band_sigmas", 3.0);
  const std::size_t replicas = config.replicas(20);
  const std::uint64_t seed = config.require_seed();
  if (!(v >= 1.0)) throw Error(ErrorKind::InvalidDensity, "invalid density: v must be >= 1");
  const Index hist_hi = count / 2;  // gaps between indices 0 .. hist_hi

  struct ReplicaRun {
    std::int64_t displacement = 0;
    Index agreement_hi = 0;
    std::vector<std::size_t> initial, final;
    std::size_t epochs = 0;
  };
  auto histogram = [&](auto&& position) {
    std::vector<std::size_t> bins(static_cast<std::size_t>(max_gap) + 1, 0);  // 1..K, then > K
    for (Index i = 0; i < hist_hi; ++i) {
      const std::int64_t gap = position(i + 1) - position(i);
      bins[static_cast<std::size_t>(std::min<std::int64_t>(gap, max_gap + 1) - 1)]++;
    }
    return bins;
  };
  std::vector<ReplicaRun> runs(replicas);
  parallel_for(replicas, [&](std::size_t k) {
    const auto sigma = sample_equilibrium_config(v, static_cast<std::size_t>(count), {seed, k});
    const auto bank = ClockBank::generate(rates, 0, count - 1, t, {seed, k});
    const auto sw = sandwich_evolve(sigma, bank, t, {t});
    if (sw.agreement.empty() || sw.agreement.hi < hist_hi)
      throw Error(ErrorKind::WindowTooSmall, "window too small: agreement window ends at " +
                                                 std::to_string(sw.agreement.empty() ? -1 : sw.agreement.hi) +
                                                 ", needs index " + std::to_string(hist_hi));
    ReplicaRun& run = runs[k];
    run.displacement = sw.upper.at(0, 0).value() - sigma.at(0).value();
    run.agreement_hi = sw.agreement.hi;
    run.epochs = sw.upper.epochs_processed;
    run.initial = histogram([&](Index i) { return sigma.at(i).value(); });
    run.final = histogram([&](Index i) { return sw.upper.at(0, i).value(); });
  });

  std::vector<double> rate_samples;
  std::vector<std::size_t> initial(static_cast<std::size_t>(max_gap) + 1, 0), final = initial;
  Index min_agreement = count - 1;
  std::ostringstream per;
  per << "replica,displacement,rate,agreement_hi\n";
  json displacements = json::array();
  for (std::size_t k = 0; k < replicas; ++k) {
    rate_samples.push_back(static_cast<double>(runs[k].displacement) / t);
    displacements.push_back(runs[k].displacement);
    min_agreement = std::min(min_agreement, runs[k].agreement_hi);
    for (std::size_t b = 0; b < initial.size(); ++b) initial[b] += runs[k].initial[b], final[b] += runs[k].final[b];
    per << k << ',' << runs[k].displacement << ',' << num(rate_samples.back()) << ',' << runs[k].agreement_hi << '\n';
  }
  const Summary rate = summarize(rate_samples);
  const double expected_rate = 1.0 - 1.0 / v;

  const double total = static_cast<double>(hist_hi) * static_cast<double>(replicas);
  std::ostringstream hist;
  hist << "gap,probability,expected,band,initial,final\n";
  json bins = json::array();
  double worst_initial = 0.0, worst_final = 0.0;
  for (std::size_t b = 0; b < final.size(); ++b) {
    const bool tail = b + 1 == final.size();
    const double p = tail ? std::pow(1.0 - 1.0 / v, static_cast<double>(max_gap))
                          : std::pow(1.0 - 1.0 / v, static_cast<double>(b)) / v;
    const double expected = total * p;
    const double band = sigmas * std::sqrt(total * p * (1.0 - p));
    // Distance in units of the band; <= 1 passes. A zero band needs an exact match.
    auto score = [&](std::size_t observed) {
      const double miss = std::abs(static_cast<double>(observed) - expected);
      return band > 0.0 ? miss / band : (miss < 0.5 ? 0.0 : std::numeric_limits<double>::infinity());
    };
    worst_initial = std::max(worst_initial, score(initial[b]));
    worst_final = std::max(worst_final, score(final[b]));
    const std::string label = tail ? ">" + std::to_string(max_gap) : std::to_string(b + 1);
    hist << label << ',' << num(p) << ',' << num(expected) << ',' << num(band) << ',' << initial[b] << ',' << final[b]
         << '\n';
    bins.push_back(json{{"gap", label}, {"probability", p}, {"expected", expected}, {"band", band},
                        {"initial", initial[b]}, {"final", final[b]}});
  }

  r.payload = json{{"v", v},
                   {"count", count},
                   {"t", t},
                   {"replicas", replicas},
                   {"seed", seed},
                   {"expected_rate", expected_rate},
                   {"rate", rate.mean},
                   {"rate_stderr", rate.stderr_},
                   {"rate_median", rate.median},
                   {"displacements", displacements},
                   {"histogram_indices", {0, hist_hi}},
                   {"min_agreement_hi", min_agreement},
                   {"histogram", bins}};
  r.tables.emplace_back("", per.str());
  r.tables.emplace_back("_gaps", hist.str());
  verdict(r, "tagged particle rate", std::abs(rate.mean - expected_rate) <= rate_tol, rate.mean, rate_tol,
          "expected " + num(expected_rate));
  verdict(r, "gap law at time t", worst_final <= 1.0, worst_final, 1.0, "worst bin, in units of the band");
  verdict(r, "gap law at time 0", worst_initial <= 1.0, worst_initial, 1.0, "worst bin, in units of the band");
  return r;
}

ExperimentResult run_theorem1_test(const ExperimentConfig& config) {
  ExperimentResult r = start(config);
  const RateTable rates = config.rates();
  const auto profiles = config.list("profiles", "step, riemann:1:3");
  const auto n = positive(config, "n", 1000);
  const double t = positive_number(config, "t_macro", 1.0);
  const auto x = config.grid("x_grid", "-1.5:0.1:0.5");
  const auto sources = config.list("sources", "analytic");
  const double tol_analytic = config.number("sup_tolerance", 0.07);
  const double tol_estimated = config.number("estimated_sup_tolerance", 0.1);
  const std::size_t replicas = config.replicas(5);
  const std::uint64_t seed = config.require_seed();

  std::vector<std::pair<std::string, GSource>> gs;
  for (const auto& s : sources) gs.emplace_back(s, g_source(config, s));
  std::vector<MacroProfile> u0s;
  for (const auto& p : profiles) u0s.push_back(MacroProfile::parse(p));

  std::ostringstream csv;
  csv << "profile,source,x,empirical,stderr,solver,z\n";
  json results = json::array();
  json g_prov = json::object();
  for (const auto& [name, src] : gs) g_prov[name] = src.provenance;

  for (std::size_t p = 0; p < u0s.size(); ++p) {
    const auto emp = empirical_profile(u0s[p], rates, n, x, t, replicas, part_seed(seed, 10 + p));
    json per_source = json::array();
    for (const auto& [name, src] : gs) {
      const auto sol = solve_profile(u0s[p], src.table, x, t);
      double sup = 0.0;
      bool matched = true;
      json rows = json::array();
      for (std::size_t k = 0; k < x.size(); ++k) {
        const ExtendedReal e = emp.mean[k], s = sol[k].value;
        double z = std::numeric_limits<double>::quiet_NaN();
        if (e.infinite || s.infinite) {
          matched = matched && e.infinite == s.infinite;
        } else {
          sup = std::max(sup, std::abs(e.value - s.value));
          if (emp.stderr_[k] > 0.0) z = (e.value - s.value) / emp.stderr_[k];
        }
        csv << profiles[p] << ',' << name << ',' << num(x[k]) << ',' << num(e) << ',' << num(emp.stderr_[k]) << ','
            << num(s) << ',' << num(z) << '\n';
        rows.push_back(json{{"x", x[k]}, {"empirical", to_json(e)}, {"stderr", emp.stderr_[k]},
                            {"solver", to_json(s)}, {"argmin", sol[k].argmin}, {"z", to_json(z)}});
      }
      const double tol = name == "estimated" ? tol_estimated : tol_analytic;
      verdict(r, "sup distance " + profiles[p] + " / " + name + " g", matched && sup <= tol, sup, tol,
              matched ? "" : "empirical and solver disagree on which points are infinite");
      per_source.push_back(json{{"source", name}, {"sup_distance", sup}, {"points", rows}});
    }
    results.push_back(json{{"profile", profiles[p]},
                           {"repairs", emp.repairs},
                           {"window", {emp.window_lo, emp.window_hi}},
                           {"exact_boundary", emp.exact_boundary},
                           {"min_agreement_hi", emp.min_agreement_hi},
                           {"epochs", emp.epochs},
                           {"comparisons", per_source}});
  }
  r.payload = json{{"n", n}, {"t_macro", t}, {"replicas", replicas}, {"seed", seed}, {"rates", rates.describe()},
                   {"g", g_prov}, {"profiles", results}};
  r.tables.emplace_back("", csv.str());
  return r;
}

ExperimentResult run_solve(const ExperimentConfig& config) {
  ExperimentResult r = start(config);
  const auto src = g_source(config, config.text("g", "analytic"));
  const auto u0 = MacroProfile::parse(config.text("profile", "linear:2"));
  const double x = config.number("x", 0.0);
  const double t = config.number("t", 1.0);
  const double y_max = config.number("y_max", std::numeric_limits<double>::quiet_NaN());
  const double tol = config.number("tolerance", 1e-4);
  const auto res = hopf_lax_solve(u0, src.table, x, t, std::isnan(y_max) ? std::nullopt : std::optional(y_max));

  r.payload = json{{"profile", u0.tag()}, {"x", x}, {"t", t}, {"g", src.provenance}, {"value", to_json(res.value)},
                   {"argmin", res.argmin}, {"y_max", res.y_max}, {"interior", res.interior}};
  std::ostringstream csv;
  csv << "x,t,value,argmin,y_max\n" << num(x) << ',' << num(t) << ',' << num(res.value) << ',' << num(res.argmin)
      << ',' << num(res.y_max) << '\n';
  r.tables.emplace_back("", csv.str());
  std::ostringstream summary;
  if (res.value.infinite) summary << "inf";
  else summary << res.value.value;
  r.summary = summary.str();
  verdict(r, "interior minimizer", res.interior, res.argmin, res.y_max);
  const double expected = config.number("expected", std::numeric_limits<double>::quiet_NaN());
  if (!std::isnan(expected)) {
    const double miss = res.value.infinite ? std::numeric_limits<double>::infinity() : std::abs(res.value.value - expected);
    verdict(r, "value near expected", miss <= tol, res.value.value, tol, "expected " + num(expected));
  }
  return r;
}

ExperimentResult run_conjugate(const ExperimentConfig& config) {
  ExperimentResult r = start(config);
  const std::string which = config.text("g", "analytic");
  const auto src = g_source(config, which);
  const auto v = config.grid("v_grid", "1:0.01:4");
  const auto rho = config.grid("rho_grid", "0.001:0.001:1");
  const double conj_tol = config.number("conjugate_tolerance", 1e-4);
  const double current_tol = config.number("current_tolerance", 1e-3);
  for (double x : rho)
    if (!(x > 0.0)) throw Error(ErrorKind::Config, "config: rho_grid must be > 0");

  const auto star = convex_conjugate(src.table, v);
  const auto flux = flux_from_g(src.table, v);
  std::vector<double> v_of_rho;
  for (double x : rho) v_of_rho.push_back(1.0 / x);
  const auto curve = flux_from_g(src.table, v_of_rho);

  std::ostringstream conj_csv, cur_csv;
  conj_csv << "v,g_star,f\n";
  for (std::size_t k = 0; k < v.size(); ++k) conj_csv << num(v[k]) << ',' << num(star.value[k]) << ',' << num(flux.f[k]) << '\n';
  cur_csv << "rho,current\n";
  std::size_t arg = 0;
  for (std::size_t k = 0; k < rho.size(); ++k) {
    cur_csv << num(rho[k]) << ',' << num(curve.current[k]) << '\n';
    if (curve.current[arg] < curve.current[k] && curve.current[k].is_finite()) arg = k;
  }
  r.tables.emplace_back("", conj_csv.str());
  r.tables.emplace_back("_current", cur_csv.str());

  std::vector<ExtendedReal> f_values = flux.f;
  r.payload = json{{"g", src.provenance},       {"resolution", star.resolution}, {"v", array(v)},
                   {"g_star", array(star.value)}, {"f", array(f_values)},       {"current_argmax_rho", rho[arg]},
                   {"current_max", to_json(curve.current[arg])}};

  const double b1 = config.rates().b1();
  bool bounded = true, monotone = true;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (flux.f[k].infinite) continue;
    bounded = bounded && flux.f[k].value <= b1 + 1e-12;
    if (k > 0 && !flux.f[k - 1].infinite) monotone = monotone && flux.f[k].value >= flux.f[k - 1].value - 1e-12;
  }
  verdict(r, "f <= B1", bounded, bounded ? 1.0 : 0.0, 1.0);
  verdict(r, "f nondecreasing", monotone, monotone ? 1.0 : 0.0, 1.0);

  if (which == "analytic") {
    double worst = 0.0;
    std::optional<double> f_at_one;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (v[k] < 1.0) continue;
      const double miss = star.value[k].infinite ? std::numeric_limits<double>::infinity()
                                                 : std::abs(star.value[k].value - (1.0 / v[k] - 1.0));
      worst = std::max(worst, miss);
      if (v[k] == 1.0) f_at_one = flux.f[k].value;
    }
    r.payload["max_conjugate_error"] = to_json(worst);
    verdict(r, "g*(v) = 1/v - 1", worst <= conj_tol, worst, conj_tol);
    if (f_at_one) verdict(r, "f(1) = 0 exactly", *f_at_one == 0.0, *f_at_one, 0.0);
    const double at = rho[arg];
    const double peak = curve.current[arg].value;
    verdict(r, "current maximized at rho = 1/2", std::abs(at - 0.5) <= current_tol, at, current_tol);
    verdict(r, "current maximum 1/4", std::abs(peak - 0.25) <= current_tol, peak, current_tol);
  }
  return r;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const std::string& kind = config.kind();
  if (kind == "simulate") return run_simulate(config);
  if (kind == "estimate-g") return run_estimate_g(config);
  if (kind == "verify-coupling") return run_verify_coupling(config);
  if (kind == "equilibrium-test") return run_equilibrium_test(config);
  if (kind == "theorem1") return run_theorem1_test(config);
  if (kind == "solve") return run_solve(config);
  if (kind == "conjugate") return run_conjugate(config);
  throw Error(ErrorKind::Config, "unknown experiment kind '" + kind + "'");
}

std::vector<std::string> write_outputs(const ExperimentResult& result, const std::string& dir, OutputFormat format) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  auto write = [&](const std::string& name, const std::string& body) {
    const auto path = (std::filesystem::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Config, "cannot write '" + path + "'");
    out << body;
    paths.push_back(path);
  };
  if (format == OutputFormat::Json) write(result.kind + ".json", result.to_json().dump(2) + "\n");
  else
    for (const auto& [suffix, body] : result.tables) write(result.kind + suffix + ".csv", body);
  return paths;
}

}  // namespace jumpex

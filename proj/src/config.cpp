#include "jumpex/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "jumpex/error.hpp"
#include "jumpex/hopflax.hpp"

namespace jumpex {

namespace {

namespace pt = boost::property_tree;

const std::set<std::string> kEstimateKeys = {"estimate_n", "estimate_replicas", "estimate_x_grid",
                                             "estimate_seed"};

std::set<std::string> kind_keys(const std::string& kind) {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"simulate", {"initial", "particles", "v", "t", "queries"}},
      {"estimate-g", {"n", "x_grid", "lipschitz_eps", "shape_tol", "compare", "sup_tolerance", "g0_tolerance"}},
      {"verify-coupling",
       {"configurations", "particles", "gap_mean", "t", "queries", "span", "monotonicity_runs",
        "monotonicity_wedges", "wedge_depth", "s", "t_after", "subadditivity_runs", "h", "ordering_pairs",
        "ordering_particles", "ordering_t"}},
      {"equilibrium-test", {"v", "count", "t", "rate_tolerance", "histogram_max_gap", "band_sigmas"}},
      {"theorem1", {"profiles", "n", "t_macro", "x_grid", "sources", "sup_tolerance", "estimated_sup_tolerance"}},
      {"solve", {"g", "profile", "x", "t", "y_max", "expected", "tolerance"}},
      {"conjugate", {"g", "v_grid", "rho_grid", "conjugate_tolerance", "current_tolerance"}},
  };
  auto keys = schema.at(kind);
  if (kind == "theorem1" || kind == "solve" || kind == "conjugate") keys.insert(kEstimateKeys.begin(), kEstimateKeys.end());
  return keys;
}

const std::set<std::string> kExperimentKeys = {"kind", "seed", "replicas"};
const std::set<std::string> kRatesKeys = {"explicit", "tail_c", "tail_q", "tail_start"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, sep);)
    if (!trim(part).empty()) out.push_back(trim(part));
  return out;
}

double to_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (trim(text.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::Config, "config: '" + text + "' is not a number (" + what + ")");
}

std::int64_t to_integer(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (trim(text.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::Config, "config: '" + text + "' is not an integer (" + what + ")");
}

void check_schema(const pt::ptree& tree, const std::string& kind) {
  std::vector<std::string> unknown;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      unknown.push_back(section + " (outside any section)");
      continue;
    }
    std::set<std::string> allowed;
    if (section == "experiment") allowed = kExperimentKeys;
    else if (section == "rates") allowed = kRatesKeys;
    else if (section == kind) allowed = kind_keys(kind);
    else {
      unknown.push_back("[" + section + "]");
      continue;
    }
    for (const auto& [key, value] : body)
      if (!allowed.contains(key)) unknown.push_back(section + "." + key);
  }
  if (!unknown.empty()) {
    std::string msg = "config: unknown keys for '" + kind + "':";
    for (const auto& u : unknown) msg += " " + u;
    throw Error(ErrorKind::Config, msg);
  }
}

}  // namespace

bool is_experiment_kind(const std::string& kind) {
  return std::find(std::begin(kExperimentKinds), std::end(kExperimentKinds), kind) != std::end(kExperimentKinds);
}

std::vector<double> parse_grid(const std::string& text) {
  const auto colon = split(text, ':');
  if (colon.size() == 3 && text.find(',') == std::string::npos) {
    const double lo = to_double(colon[0], text), step = to_double(colon[1], text), hi = to_double(colon[2], text);
    if (!(step > 0.0) || hi < lo) throw Error(ErrorKind::Config, "config: bad grid '" + text + "'");
    return arithmetic_grid(lo, step, hi);
  }
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(to_double(item, text));
  if (out.empty()) throw Error(ErrorKind::Config, "config: empty grid");
  for (std::size_t k = 1; k < out.size(); ++k)
    if (!(out[k] > out[k - 1])) throw Error(ErrorKind::Config, "config: grid '" + text + "' must be increasing");
  return out;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& kind) {
  if (!is_experiment_kind(kind)) throw Error(ErrorKind::Config, "unknown experiment kind '" + kind + "'");
  ExperimentConfig cfg;
  cfg.kind_ = kind;
  std::istringstream in(text);
  try {
    pt::read_ini(in, cfg.tree_);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::Config, std::string("config: ") + e.what());
  }
  check_schema(cfg.tree_, kind);
  if (const auto k = cfg.tree_.get_optional<std::string>("experiment.kind"); k && trim(*k) != kind)
    throw Error(ErrorKind::Config, "config is for '" + trim(*k) + "', not '" + kind + "'");
  cfg.tree_.put("experiment.kind", kind);
  if (cfg.seed()) cfg.set_seed(*cfg.seed());
  (void)cfg.rates();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path, const std::string& kind) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), kind);
}

ExperimentConfig ExperimentConfig::defaults(const std::string& kind) { return parse("", kind); }

void ExperimentConfig::set_seed(std::uint64_t seed) { tree_.put("experiment.seed", std::to_string(seed)); }

void ExperimentConfig::set_replicas(std::size_t replicas) {
  tree_.put("experiment.replicas", std::to_string(replicas));
}

std::optional<std::uint64_t> ExperimentConfig::seed() const {
  const auto s = tree_.get_optional<std::string>("experiment.seed");
  if (!s) return std::nullopt;
  const std::string t = trim(*s);
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(t, &used);
    if (used == t.size() && t.find('-') == std::string::npos) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::Config, "config: seed '" + t + "' is not a nonnegative integer");
}

std::uint64_t ExperimentConfig::require_seed() const {
  if (const auto s = seed()) return *s;
  throw Error(ErrorKind::Config, "a seed is required: set experiment.seed or pass --seed");
}

std::size_t ExperimentConfig::replicas(std::size_t fallback) const {
  const auto s = tree_.get_optional<std::string>("experiment.replicas");
  if (!s) return fallback;
  const auto v = to_integer(trim(*s), "experiment.replicas");
  if (v < 1) throw Error(ErrorKind::Config, "config: replicas must be >= 1");
  return static_cast<std::size_t>(v);
}

RateTable ExperimentConfig::rates() const {
  std::vector<RateEntry> entries;
  for (const auto& item : split(tree_.get<std::string>("rates.explicit", "1:1"), ',')) {
    const auto kv = split(item, ':');
    if (kv.size() != 2) throw Error(ErrorKind::Config, "config: rate entry '" + item + "' is not k:beta");
    entries.push_back({to_integer(kv[0], "rates.explicit"), to_double(kv[1], "rates.explicit")});
  }
  std::optional<GeometricTail> tail;
  if (const auto c = tree_.get_optional<std::string>("rates.tail_c")) {
    const auto q = tree_.get_optional<std::string>("rates.tail_q");
    if (!q) throw Error(ErrorKind::Config, "config: rates.tail_c needs rates.tail_q");
    std::int64_t start = entries.empty() ? 1 : entries.back().k + 1;
    if (const auto s = tree_.get_optional<std::string>("rates.tail_start")) start = to_integer(trim(*s), "tail_start");
    tail = GeometricTail{to_double(trim(*c), "tail_c"), to_double(trim(*q), "tail_q"), start};
  }
  try {
    return make_rate_table(entries, tail);
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, std::string("config: ") + e.what());
  }
}

bool ExperimentConfig::rates_are_tasep() const {
  const RateTable t = rates();
  return t.single_label() && t.rate(1) == 1.0;
}

double ExperimentConfig::number(const std::string& key, double fallback) const {
  const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(kind_ + "/" + key, '/'));
  return v ? to_double(trim(*v), kind_ + "." + key) : fallback;
}

std::int64_t ExperimentConfig::integer(const std::string& key, std::int64_t fallback) const {
  const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(kind_ + "/" + key, '/'));
  return v ? to_integer(trim(*v), kind_ + "." + key) : fallback;
}

std::string ExperimentConfig::text(const std::string& key, const std::string& fallback) const {
  const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(kind_ + "/" + key, '/'));
  return v ? trim(*v) : fallback;
}

std::vector<double> ExperimentConfig::grid(const std::string& key, const std::string& fallback) const {
  return parse_grid(text(key, fallback));
}

std::vector<std::string> ExperimentConfig::list(const std::string& key, const std::string& fallback) const {
  return split(text(key, fallback), ',');
}

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream out;
  pt::write_ini(out, tree_);
  return out.str();
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_text()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace jumpex

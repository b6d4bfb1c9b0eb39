#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "jumpex/rates.hpp"

namespace jumpex {

/// Experiment kinds, named as the CLI subcommands.
inline constexpr const char* kExperimentKinds[] = {"simulate", "estimate-g", "verify-coupling", "equilibrium-test",
                                                   "theorem1", "solve",      "conjugate"};

bool is_experiment_kind(const std::string& kind);

/// Flat key-value config with sections (INI syntax):
///
///   [experiment]  kind, seed, replicas
///   [rates]       explicit = "1:0.6, 2:0.3, 3:0.1", tail_c, tail_q, tail_start
///   [<kind>]      keys of that experiment (see README)
///
/// Every key is checked against the schema of its kind; unknown sections and
/// keys are errors, all reported at once.
class ExperimentConfig {
 public:
  /// Throws Error(Config).
  static ExperimentConfig parse(const std::string& text, const std::string& kind);
  static ExperimentConfig load(const std::string& path, const std::string& kind);
  /// Built-in defaults only (no file).
  static ExperimentConfig defaults(const std::string& kind);

  const std::string& kind() const noexcept { return kind_; }

  void set_seed(std::uint64_t seed);
  void set_replicas(std::size_t replicas);
  std::optional<std::uint64_t> seed() const;
  /// Throws Error(Config) when no seed was given.
  std::uint64_t require_seed() const;
  std::size_t replicas(std::size_t fallback) const;

  RateTable rates() const;
  bool rates_are_tasep() const;

  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  /// "lo:step:hi" or a comma-separated list.
  std::vector<double> grid(const std::string& key, const std::string& fallback) const;
  /// Comma-separated list of strings.
  std::vector<std::string> list(const std::string& key, const std::string& fallback) const;

  /// Canonical INI text of the effective config (overrides included).
  std::string canonical_text() const;
  /// FNV-1a 64 of canonical_text(), as 16 hex digits.
  std::string hash() const;

 private:
  std::string kind_;
  boost::property_tree::ptree tree_;
};

std::vector<double> parse_grid(const std::string& text);

}  // namespace jumpex

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "jumpex/config.hpp"
#include "jumpex/configuration.hpp"
#include "jumpex/rng.hpp"

namespace jumpex {

inline constexpr int kResultSchemaVersion = 1;

struct Verdict {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// Payload, verdicts and provenance of one experiment. Contains no timing or
/// host data, so equal configs give byte-equal outputs.
struct ExperimentResult {
  std::string kind;
  std::string config_text;
  std::string config_hash;
  std::vector<Verdict> verdicts;
  nlohmann::ordered_json payload;
  /// (file suffix, CSV text with header), written as <kind><suffix>.csv
  std::vector<std::pair<std::string, std::string>> tables;
  /// Text for stdout (the solve value).
  std::string summary;

  bool passed() const;
  nlohmann::ordered_json to_json() const;
};

/// Gaps sigma(i+1) - sigma(i) i.i.d. with P(m) = (1 - 1/v)^(m-1) / v,
/// sigma(0) = 0, indices [0, count). Throws Error(InvalidDensity) for v < 1.
Configuration sample_equilibrium_config(double v, std::size_t count, StreamSeed seed);

/// Runs one experiment of config.kind().
ExperimentResult run_experiment(const ExperimentConfig& config);

ExperimentResult run_simulate(const ExperimentConfig& config);
ExperimentResult run_estimate_g(const ExperimentConfig& config);
ExperimentResult run_verify_coupling(const ExperimentConfig& config);
/// TASEP only; throws Error(Config) for other rates and Error(WindowTooSmall)
/// when the sandwich agreement window misses index 0 or the histogram range.
ExperimentResult run_equilibrium_test(const ExperimentConfig& config);
ExperimentResult run_theorem1_test(const ExperimentConfig& config);
ExperimentResult run_solve(const ExperimentConfig& config);
ExperimentResult run_conjugate(const ExperimentConfig& config);

enum class OutputFormat { Json, Csv };

/// Writes <dir>/<kind>.json or the <kind>*.csv tables; returns the paths.
std::vector<std::string> write_outputs(const ExperimentResult& result, const std::string& dir, OutputFormat format);

}  // namespace jumpex

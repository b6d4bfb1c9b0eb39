// jumpex: run one experiment from a config file and write its results.
//
//   jumpex <kind> [--config FILE] [--seed N] [--replicas N] [--out DIR]
//                 [--format json|csv] [--quiet]
//
// Exit codes: 0 all verdicts pass, 1 a verdict fails or a run aborts,
// 2 usage or config error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "jumpex/error.hpp"
#include "jumpex/harness.hpp"

namespace {

bool is_usage_error(jumpex::ErrorKind kind) {
  using jumpex::ErrorKind;
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::InvalidArgument:
    case ErrorKind::InvalidDensity:
    case ErrorKind::DegenerateRates:
    case ErrorKind::DivergentTail:
    case ErrorKind::InvalidTime:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exclusion process with long jumps: simulation and hydrodynamic checks", "jumpex"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", JUMPEX_VERSION);

  std::string config_path, out_dir, format = "json";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  bool quiet = false;
  for (const char* kind : jumpex::kExperimentKinds) {
    auto* sub = app.add_subcommand(kind);
    sub->add_option("--config", config_path, "INI config file (defaults are used without one)")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed, overrides experiment.seed");
    sub->add_option("--replicas", replicas, "replica count, overrides experiment.replicas")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "directory for result files");
    sub->add_option("--format", format, "result file format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_flag("--quiet", quiet, "print nothing on success");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string kind = app.get_subcommands().front()->get_name();

  try {
    auto config = config_path.empty() ? jumpex::ExperimentConfig::defaults(kind)
                                      : jumpex::ExperimentConfig::load(config_path, kind);
    if (seed) config.set_seed(*seed);
    if (replicas) config.set_replicas(*replicas);
    const auto result = jumpex::run_experiment(config);

    if (!out_dir.empty())
      jumpex::write_outputs(result, out_dir, format == "csv" ? jumpex::OutputFormat::Csv : jumpex::OutputFormat::Json);
    else if (!quiet && result.summary.empty())
      std::cout << result.to_json().dump(2) << '\n';
    if (!result.summary.empty() && !quiet) std::cout << result.summary << '\n';
    for (const auto& v : result.verdicts)
      if (!quiet || !v.passed)
        std::cerr << (v.passed ? "PASS " : "FAIL ") << v.name << ": " << v.value << " (threshold " << v.threshold
                  << ")" << (v.detail.empty() ? "" : " " + v.detail) << '\n';
    return result.passed() ? 0 : 1;
  } catch (const jumpex::Error& e) {
    std::cerr << "jumpex " << kind << ": " << e.what() << '\n';
    return is_usage_error(e.kind()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "jumpex " << kind << ": " << e.what() << '\n';
    return 1;
  }
}

#pragma once

// Experiment configs, the runner behind the command-line tool, and the
// artifacts it writes (results.csv, summary.json, plotdata/*.csv).

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace splinemart {

inline constexpr const char* kResultsVersion = "splinemart-results/1";

enum class ExitCode : int { pass = 0, config_error = 1, fail = 2 };

struct ExperimentConfig {
  std::string experiment;
  int order = 2;
  std::vector<std::size_t> schedule;
  std::uint64_t seed = 0;
  std::optional<std::string> out_dir;
  nlohmann::json record;   ///< the full parsed config
  std::string source;      ///< raw text, for line lookups
  std::string origin;      ///< file name used in diagnostics

  /// "origin:line: message" with the line of the first occurrence of `key`.
  [[nodiscard]] std::string locate(const std::string& key, const std::string& message) const;
};

[[nodiscard]] const std::vector<std::string>& experiment_names();

/// Parses and validates a config; throws ConfigError with a line-numbered message.
[[nodiscard]] ExperimentConfig parse_config(const std::string& text,
                                            const std::string& origin = "<config>");
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// Seed precedence: explicit override, then SPLINEMART_SEED, then the config.
void apply_seed_override(ExperimentConfig& config, std::optional<std::uint64_t> cli_seed);

struct ExperimentResult {
  std::string experiment;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  nlohmann::json summary;
  std::map<std::string, std::vector<std::pair<double, double>>> plotdata;
  bool pass = false;
};

/// Runs the experiment. ConfigError propagates; numerical failures are
/// recorded in the summary with a FAIL verdict.
[[nodiscard]] ExperimentResult run_experiment(const ExperimentConfig& config);

/// Number formatting shared by every CSV writer (round-trip precision).
[[nodiscard]] std::string format_number(double x);

[[nodiscard]] std::string results_csv(const ExperimentResult& result);
void write_artifacts(const ExperimentResult& result, const std::filesystem::path& dir);

/// Full `run` command: returns the process exit code and prints diagnostics to stderr.
[[nodiscard]] int run_command(const std::filesystem::path& config_path,
                              std::optional<std::filesystem::path> out_dir,
                              std::optional<std::uint64_t> seed);

[[nodiscard]] nlohmann::json registry_json();
[[nodiscard]] std::string registry_text();

}  // namespace splinemart

#pragma once

// Named batch experiments over a system configuration. Each run writes CSV
// tables plus manifest.json into its output directory.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace rdspec {

inline constexpr const char* kToolVersion = "0.1.0";

struct ExperimentConfig {
  std::string experiment;
  nlohmann::json system;                                  // dynamics-core schema
  nlohmann::json parameters = nlohmann::json::object();  // experiment-specific
  std::string output_dir;
  std::optional<std::uint64_t> master_seed;
};

const std::vector<std::string>& experiment_names();

/// Accepts {system, experiment, parameters, output_dir, master_seed} or a bare
/// system object. ConfigError messages name the offending field.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct RunOptions {
  unsigned jobs = 1;
  bool record_time = false;
};

struct OutputFile {
  std::string name;  // relative to the output directory
  std::size_t rows = 0;
};

struct RunManifest {
  std::string experiment;
  std::string version = kToolVersion;
  std::string config_hash;
  std::uint64_t seed = 0;
  nlohmann::json parameters;  // with defaults filled in
  std::vector<OutputFile> files;
  std::map<std::string, std::size_t> failures;
  std::vector<std::string> assertion_failures;
  nlohmann::json summary = nlohmann::json::object();
  std::optional<double> wall_time_seconds;

  bool passed() const { return assertion_failures.empty(); }
  nlohmann::json to_json() const;
};

/// Runs the experiment and writes its tables and manifest.json. Invariant
/// violations are collected in `assertion_failures`; ConfigError and
/// NumericalError propagate.
RunManifest run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Two-column series files next to the manifest, one per plotted table.
/// Throws ConfigError on an empty manifest or a missing table.
std::vector<std::filesystem::path> emit_plot_series(const std::filesystem::path& manifest_path);

}  // namespace rdspec

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "relrep/dynamics.hpp"
#include "relrep/ecm.hpp"
#include "relrep/kvtext.hpp"

namespace relrep {

enum class ExperimentKind { field, gd, ecm, fim, nn };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& text);

inline constexpr int kCsvSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::field;
  KeyValueText values;
  /// Resolved seed: the --seed override or the `seed` key.
  std::optional<std::uint64_t> seed;
  /// Text the config was parsed from; hashed into the manifest.
  std::string text;
};

/// Parses a config and checks its `experiment` key against `expected` when
/// given.  Config errors carry the source name and line.
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source,
                                         std::optional<ExperimentKind> expected = std::nullopt,
                                         std::optional<std::uint64_t> seed_override = std::nullopt);
ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        std::optional<ExperimentKind> expected = std::nullopt,
                                        std::optional<std::uint64_t> seed_override = std::nullopt);

/// Every key a config of this kind understands, with its default value.
std::string default_config(ExperimentKind kind);

struct ManifestEntry {
  std::string file;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string experiment;
  std::string config_hash;
  std::string tool_version = kToolVersion;
  double wall_seconds = 0.0;
  std::vector<ManifestEntry> files;
  /// False when an iterative fit hit max_iters; artifacts are still written.
  bool converged = true;
  /// Free-form result lines (also written to the report file when present).
  std::vector<std::string> summary;

  std::string to_json() const;
};

/// Runs the experiment, writes its artifacts plus manifest.json into
/// `out_dir` (created when missing) and returns the manifest.
RunManifest run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

std::string sha256_hex(const std::string& bytes);

// CSV emitters.  Each starts with `# schema=<n> kind=<...>` then a header row.
std::string flow_field_csv(const std::vector<FlowField>& fields);
std::string trajectory_csv(const Trajectory& trajectory, const std::string& parameterization);
/// Trajectory columns plus `algorithm`.
std::string fit_trajectory_csv(const std::vector<std::pair<std::string, const FitResult*>>& runs);

}  // namespace relrep

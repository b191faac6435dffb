// Experiment configuration (JSON). Defaults: gamma 0.25, threshold 5/8,
// three clusters, KNN 2, learning rate 1e-4, batch 32.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "asc/cqt.hpp"
#include "asc/reference_model.hpp"
#include "asc/simulation.hpp"
#include "asc/voting.hpp"

namespace asc::harness {

enum class RunMode { synthetic, real };

struct ClusteringConfig {
  int k = 3;
  std::optional<int> knn = 2;
  bool per_patch = true;
};

struct ClassifierConfig {
  model::TrainConfig train;
  double holdout_fraction = 0.0;
};

struct ExperimentConfig {
  RunMode mode = RunMode::synthetic;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "asc-out";

  // synthetic
  int folds = 4;
  SimSpec simulation;

  // real
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> classes;
  int split = 0;
  std::vector<int> fold_ids;  // empty -> all folds of the split
  dsp::CqtParams cqt;
  ClassifierConfig classifier;
  bool write_patches = true;

  ClusteringConfig clustering;
  vote::PunishmentConfig punishment;
  /// Fixed partition file; skips clustering when set.
  std::optional<std::filesystem::path> partition;

  /// Directory that relative paths are resolved against.
  std::filesystem::path base_dir = ".";

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  void validate() const;
};

/// Parses JSON text; unknown keys are rejected. Throws ValidationError.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of every parameter (defaults filled in). base_dir is not
/// part of the echo.
std::string config_to_json(const ExperimentConfig& config);

SimSpec parse_sim_spec(const std::string& json_text);
SimSpec load_sim_spec(const std::filesystem::path& path);
std::string sim_spec_to_json(const SimSpec& spec);

}  // namespace asc::harness

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "metabalance/eval/metrics.hpp"
#include "metabalance/experiment/config.hpp"

namespace metabalance::experiment {

/// Train / test tables ready for training, with their provenance.
struct PreparedData {
  data::Dataset train;
  data::Dataset test;
  data::DatasetManifest manifest;
};

/// Relative paths resolve against $METABALANCE_DATA_DIR when it is set.
std::filesystem::path resolve_data_path(const std::string& path);

/// Loads (or generates), splits and normalizes as configured.
PreparedData prepare_data(const DatasetConfig& config);

/// Writes train.csv, test.csv and manifest.json; returns the paths written.
std::vector<std::filesystem::path> write_prepared(const PreparedData& data,
                                                  const std::filesystem::path& dir);
std::string manifest_json(const data::DatasetManifest& m);

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::string error;  // empty on success
  eval::MetricsReport metrics;
  /// Multi-class only: metrics after dividing scores by training class frequencies.
  std::optional<eval::MetricsReport> prior_adjusted;
  double headline = 0.0;  // ROC-AUC (binary) or balanced accuracy
  double wall_seconds = 0.0;
  std::vector<std::string> artifacts;

  bool ok() const { return error.empty(); }
};

struct RunManifest {
  ExperimentConfig config;
  std::string dataset_checksum;
  std::string headline_name;
  std::vector<SeedOutcome> seeds;
  double mean = 0.0;
  double std_err = 0.0;  // NaN ("N/A") with fewer than two successful seeds
  double wall_seconds = 0.0;
  std::vector<std::string> artifacts;

  std::size_t failures() const;
  std::string to_json() const;
};

/// Model trained for one seed (no artifacts written).
train::TrainResult train_seed(const ExperimentConfig& config, const PreparedData& data, std::uint64_t seed);

/// Test-set metrics for a trained model; prior-adjusted metrics for multi-class heads.
SeedOutcome evaluate_seed(const nn::Mlp& model, const PreparedData& data, std::uint64_t seed);

/**
 * Trains and evaluates every seed (concurrently with config.threads > 1)
 * and writes per-seed logs, metrics, checkpoints and manifest.json under
 * `out_dir`. Seed failures are recorded, not thrown.
 */
RunManifest run_experiment(const ExperimentConfig& config, const PreparedData& data,
                           const std::filesystem::path& out_dir);

/// Runs config.grid; writes grid.csv and grid.json under `out_dir`.
train::GridResult run_grid(const ExperimentConfig& config, const PreparedData& data,
                           const std::filesystem::path& out_dir);

/**
 * Reads every seed_<s>/train_log.csv under `run_dir` and writes
 * curves/class_<c>.csv (epoch, per-seed train and test accuracy, their
 * means) plus curves/curves_long.csv.
 */
std::vector<std::filesystem::path> write_curves(const std::filesystem::path& run_dir);

}  // namespace metabalance::experiment

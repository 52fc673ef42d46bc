#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "metabalance/data/ingest.hpp"
#include "metabalance/nn/mlp.hpp"
#include "metabalance/train/trainer.hpp"

namespace metabalance::experiment {

enum class DataSource { csv, synthetic };

/// Gaussian-blob training set plus a separately drawn balanced test set.
struct SyntheticSource {
  int classes = 10;
  std::vector<std::size_t> counts;  // per class, before any imbalance simulation
  std::size_t dim = 32;
  double separation = 4.0;
  std::optional<data::ImbalanceMode> imbalance;  // applied to classes other than 0
  std::size_t test_per_class = 200;
  std::uint64_t seed = 0;

  bool operator==(const SyntheticSource&) const = default;
};

struct DatasetConfig {
  DataSource source = DataSource::csv;
  std::string path;  // csv only; relative paths resolve against the data directory
  data::CsvOptions csv;
  data::Normalize normalize = data::Normalize::zscore;
  data::SplitSpec split;
  SyntheticSource synthetic;

  bool operator==(const DatasetConfig&) const = default;
};

enum class TrainerMode { baseline, metabalance };

struct GridSpec {
  std::vector<resample::SamplerKind> inner;
  std::vector<resample::SamplerKind> outer;
  bool operator==(const GridSpec&) const = default;
};

/**
 * Everything a run needs. The trainer seed fields are ignored; every entry
 * of `seeds` produces one run whose model initialization, batch order,
 * dropout masks and resampling all derive from that seed.
 */
struct ExperimentConfig {
  std::string name;
  DatasetConfig dataset;
  nn::MlpSpec model;
  TrainerMode mode = TrainerMode::baseline;
  train::BaselineConfig baseline;
  train::MetaTrainConfig metabalance;
  GridSpec grid;
  std::vector<std::uint64_t> seeds{0};
  unsigned threads = 1;
  std::string output_dir = "runs";

  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

std::vector<std::string> preset_names();
/// Built-in configuration by name; throws ConfigError for unknown names.
ExperimentConfig preset(const std::string& name);

/**
 * Parses a JSON document. A top-level "preset" key selects a built-in
 * configuration that the rest of the document patches (JSON merge-patch
 * semantics); without it every section must be given. Unknown keys are
 * errors.
 */
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Fully resolved JSON; parse_config(to_json(c)) == c.
std::string to_json(const ExperimentConfig& config);

std::string to_string(TrainerMode mode);
std::string to_string(DataSource source);

}  // namespace metabalance::experiment

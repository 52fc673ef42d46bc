#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metabalance/data/dataset.hpp"

namespace metabalance::data {

enum class Normalize { none, zscore };

struct CsvOptions {
  std::string label_column;
  std::vector<std::string> drop_columns;
  char delimiter = ',';
  bool operator==(const CsvOptions&) const = default;
};

/// What load_csv did beyond the returned table.
struct LoadReport {
  std::vector<std::string> dropped_columns;  // non-numeric, dropped with a warning
  std::vector<std::string> class_names;      // label value of each class index
};

/**
 * Reads a delimited numeric table with a header row.
 *
 * A column whose first data cell is not numeric is treated as categorical
 * and dropped (with a warning); any later unparseable cell in a numeric
 * column is an error reporting its row and column. Labels that are all
 * non-negative integers are used as class indices directly; otherwise the
 * distinct label strings are mapped to indices in sorted order.
 */
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options,
                 LoadReport* report = nullptr);

/// Writes features, the label and an optional extra column (e.g. provenance).
void write_csv(const std::filesystem::path& path, const Dataset& ds,
               const std::vector<std::string>* extra_column = nullptr,
               const std::string& extra_name = "provenance");

/// Per-column standardization statistics fit on one dataset and reusable on others.
struct ZScore {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd stddev;

  /// Population statistics; zero-variance columns get stddev 1.
  static ZScore fit(const Dataset& ds);
  void apply(Dataset& ds) const;
  Dataset transform(Dataset ds) const {
    apply(ds);
    return ds;
  }
};

struct SplitSpec {
  double train_fraction = 0.8;
  bool stratified = false;
  std::uint64_t seed = 0;
  bool operator==(const SplitSpec&) const = default;
};

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;  // ascending indices into the source
  std::vector<std::size_t> test_rows;
};

/// Disjoint, exhaustive train/test partition, deterministic in the seed.
Split split(const Dataset& ds, const SplitSpec& spec);

struct ImbalanceMode {
  enum class Kind { fixed, range } kind = Kind::fixed;
  std::size_t count = 5;   // fixed
  std::size_t low = 5;     // range, inclusive
  std::size_t high = 50;   // range, inclusive

  static ImbalanceMode fixed(std::size_t k) { return {Kind::fixed, k, 0, 0}; }
  static ImbalanceMode range(std::size_t lo, std::size_t hi) { return {Kind::range, 0, lo, hi}; }
  bool operator==(const ImbalanceMode&) const = default;
};

/// Downsamples every class except `majority_class` without replacement to a
/// fixed count or an independent uniform draw from [low, high].
Dataset simulate_imbalance(const Dataset& ds, const ImbalanceMode& mode, int majority_class,
                           std::uint64_t seed);

/**
 * Gaussian blobs with identity covariance. Class means are the vertices of
 * a regular simplex with edge length `separation`, so every pair of means
 * is exactly `separation` apart; needs dim >= n_classes - 1.
 */
Dataset make_synthetic(int n_classes, const std::vector<std::size_t>& per_class_counts,
                       std::size_t dim, double separation, std::uint64_t seed);

/// Class means used by make_synthetic (n_classes x dim).
MatrixD simplex_means(int n_classes, std::size_t dim, double separation);

/// Reproducibility record for a prepared split.
struct DatasetManifest {
  std::string source;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  bool stratified = false;
  Normalize normalize = Normalize::zscore;
  std::size_t rows = 0;
  std::map<int, std::size_t> class_counts;
  std::map<int, std::size_t> train_class_counts;
  std::map<int, std::size_t> test_class_counts;
  std::string split_checksum;    // over the train/test index lists
  std::string train_checksum;    // over the (normalized) train table
  std::string test_checksum;
  std::vector<std::string> dropped_columns;
};

std::string split_checksum(const Split& s);

/// load -> split -> z-score fit on train only -> transform both.
struct Prepared {
  Split split;
  std::optional<ZScore> normalizer;
  DatasetManifest manifest;
};

Prepared prepare_dataset(const std::filesystem::path& path, const CsvOptions& options,
                         const SplitSpec& split_spec, Normalize normalize);
/// Same pipeline on an in-memory table (synthetic sources).
Prepared prepare_dataset(const Dataset& ds, const std::string& source,
                         const SplitSpec& split_spec, Normalize normalize);

}  // namespace metabalance::data

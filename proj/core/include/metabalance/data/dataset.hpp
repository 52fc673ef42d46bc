#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metabalance/autodiff/tensor.hpp"

namespace metabalance::data {

using ad::MatrixD;

/**
 * Row-major feature matrix with integer class labels in [0, num_classes).
 *
 * class_counts lists every class in [0, num_classes), including classes
 * that currently have no rows.
 */
struct Dataset {
  MatrixD features;
  std::vector<int> labels;
  std::map<int, std::size_t> class_counts;
  std::vector<std::string> feature_names;
  std::optional<MatrixD> soft_labels;
  int num_classes = 0;

  /// Builds and validates; num_classes defaults to max label + 1.
  static Dataset from(MatrixD features, std::vector<int> labels, int num_classes = 0,
                      std::vector<std::string> feature_names = {});

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  bool empty() const { return labels.empty(); }

  /// Recomputes class_counts from labels.
  void recount();
  /// Throws DataError on any broken invariant (shape, counts, NaN, soft rows).
  void validate() const;

  /// Rows in the given order (duplicates allowed).
  Dataset subset(std::span<const std::size_t> rows) const;
  std::vector<std::size_t> rows_of_class(int c) const;

  /// Class with the most rows (ties: lower label).
  int majority_class() const;
  /// Non-empty class with the fewest rows (ties: lower label).
  int minority_class() const;
  std::size_t count(int c) const;
  /// Soft labels if present, one-hot rows otherwise.
  MatrixD label_matrix() const;
};

/// Content hash over shape, feature bytes and labels.
std::uint64_t checksum(const Dataset& ds);

}  // namespace metabalance::data

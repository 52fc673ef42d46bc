#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "metabalance/autodiff/tensor.hpp"

namespace metabalance::eval {

using ad::MatrixD;
using Confusion = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/**
 * Area under the ROC curve for binary labels (1 = positive), computed from
 * average ranks: the fraction of (positive, negative) pairs in which the
 * positive scores higher, ties counting one half. Throws DataError when only
 * one class is present.
 */
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct RocPoint {
  double threshold;  // predict positive when score >= threshold
  double fpr;
  double tpr;
};

/// One point per distinct score (descending), starting at (0, 0).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);
void write_roc_csv(const std::filesystem::path& path, const std::vector<RocPoint>& points);

struct MetricsReport {
  std::optional<double> roc_auc;  // binary tasks only
  double overall_accuracy = 0.0;
  /// Mean of per-class accuracies over the classes present in the labels.
  double balanced_accuracy = 0.0;
  std::map<int, double> per_class_accuracy;  // classes with at least one label
  Confusion confusion;                       // rows: true class, columns: predicted
  std::size_t n_test = 0;

  std::string to_json() const;
  void write_csv(const std::filesystem::path& path) const;
};

/// Accuracy figures and confusion matrix for class predictions.
MetricsReport per_class_accuracy(std::span<const int> predictions, std::span<const int> labels,
                                 int num_classes);

/// Argmax of score_c / freq_c per row. Throws ConfigError on a non-positive
/// frequency or a column-count mismatch.
std::vector<int> prior_adjust(const MatrixD& class_scores, std::span<const double> train_frequencies);

/// Binary scores (P(class 1), n x 1) expanded to two columns (1 - p, p).
MatrixD binary_class_scores(std::span<const double> positive_scores);

struct ThresholdMatch {
  double threshold = 0.0;  // predict class 1 when score > threshold
  double majority_accuracy = 0.0;
  MetricsReport report;
};

/**
 * Scans thresholds at -inf, every midpoint between consecutive distinct
 * scores and +inf, and returns the one whose accuracy on `majority_class`
 * is closest to `target` (ties: lower threshold).
 */
ThresholdMatch threshold_match(std::span<const double> scores, std::span<const int> labels,
                               double target, int majority_class = 0);

/// Predictions at a fixed threshold: class 1 when score > threshold.
std::vector<int> threshold_predictions(std::span<const double> scores, double threshold);

}  // namespace metabalance::eval

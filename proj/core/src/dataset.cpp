#include "metabalance/data/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "metabalance/errors.hpp"
#include "metabalance/serialize.hpp"

namespace metabalance::data {

Dataset Dataset::from(MatrixD features, std::vector<int> labels, int num_classes,
                      std::vector<std::string> feature_names) {
  Dataset ds;
  ds.features = std::move(features);
  ds.labels = std::move(labels);
  ds.feature_names = std::move(feature_names);
  int max_label = -1;
  for (int y : ds.labels) max_label = std::max(max_label, y);
  ds.num_classes = num_classes > 0 ? num_classes : max_label + 1;
  ds.recount();
  ds.validate();
  return ds;
}

void Dataset::recount() {
  class_counts.clear();
  for (int c = 0; c < num_classes; ++c) class_counts[c] = 0;
  for (int y : labels) ++class_counts[y];
}

void Dataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw DataError("dataset: " + std::to_string(features.rows()) + " feature rows but " +
                    std::to_string(labels.size()) + " labels");
  if (!feature_names.empty() && feature_names.size() != dim())
    throw DataError("dataset: feature name count does not match column count");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw DataError("dataset: label " + std::to_string(labels[i]) + " at row " +
                      std::to_string(i) + " outside [0, " + std::to_string(num_classes) + ")");
  std::map<int, std::size_t> counts;
  for (int c = 0; c < num_classes; ++c) counts[c] = 0;
  for (int y : labels) ++counts[y];
  if (counts != class_counts) throw DataError("dataset: class_counts inconsistent with labels");
  if (!features.allFinite()) {
    for (Eigen::Index i = 0; i < features.rows(); ++i)
      for (Eigen::Index j = 0; j < features.cols(); ++j)
        if (!std::isfinite(features(i, j)))
          throw DataError("dataset: non-finite feature at row " + std::to_string(i) +
                          ", column " + std::to_string(j));
  }
  if (soft_labels) {
    if (soft_labels->rows() != features.rows() || soft_labels->cols() != num_classes)
      throw DataError("dataset: soft label matrix has the wrong shape");
    for (Eigen::Index i = 0; i < soft_labels->rows(); ++i)
      if (std::abs(soft_labels->row(i).sum() - 1.0) > 1e-9)
        throw DataError("dataset: soft label row " + std::to_string(i) + " does not sum to 1");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.num_classes = num_classes;
  out.feature_names = feature_names;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  if (soft_labels) out.soft_labels = MatrixD(static_cast<Eigen::Index>(rows.size()), num_classes);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(r);
    out.labels.push_back(labels[rows[i]]);
    if (soft_labels) out.soft_labels->row(static_cast<Eigen::Index>(i)) = soft_labels->row(r);
  }
  out.recount();
  return out;
}

std::vector<std::size_t> Dataset::rows_of_class(int c) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == c) out.push_back(i);
  return out;
}

int Dataset::majority_class() const {
  int best = 0;
  std::size_t best_count = 0;
  for (const auto& [c, n] : class_counts)
    if (n > best_count) {
      best = c;
      best_count = n;
    }
  return best;
}

int Dataset::minority_class() const {
  int best = -1;
  std::size_t best_count = 0;
  for (const auto& [c, n] : class_counts)
    if (n > 0 && (best < 0 || n < best_count)) {
      best = c;
      best_count = n;
    }
  return best;
}

std::size_t Dataset::count(int c) const {
  auto it = class_counts.find(c);
  return it == class_counts.end() ? 0 : it->second;
}

MatrixD Dataset::label_matrix() const {
  if (soft_labels) return *soft_labels;
  MatrixD m = MatrixD::Zero(static_cast<Eigen::Index>(labels.size()), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) m(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return m;
}

std::uint64_t checksum(const Dataset& ds) {
  std::uint64_t h = fnv1a(std::to_string(ds.features.rows()) + "x" +
                          std::to_string(ds.features.cols()) + "/" +
                          std::to_string(ds.num_classes));
  h = fnv1a(std::as_bytes(std::span(ds.features.data(), static_cast<std::size_t>(ds.features.size()))),
            h);
  h = fnv1a(std::as_bytes(std::span(ds.labels)), h);
  return h;
}

}  // namespace metabalance::data

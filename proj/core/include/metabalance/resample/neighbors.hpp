#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "metabalance/autodiff/tensor.hpp"
#include "metabalance/random.hpp"

namespace metabalance::resample {

using ad::MatrixD;

/**
 * Brute-force k nearest neighbours of row `query` of `points` among the
 * `candidates` rows, excluding `query` itself. Euclidean distance; ties go
 * to the lower row index. Returns fewer than k rows when fewer candidates
 * exist.
 */
std::vector<std::size_t> k_nearest(const MatrixD& points, std::size_t query,
                                   std::span<const std::size_t> candidates, std::size_t k);

/// Same, for an arbitrary query point (nothing excluded).
std::vector<std::size_t> k_nearest_point(const MatrixD& points, const Eigen::RowVectorXd& query,
                                         std::span<const std::size_t> candidates, std::size_t k);

/// Plurality label among `neighbors`; ties go to the smaller label.
int vote(std::span<const std::size_t> neighbors, std::span<const int> labels);

struct KMeansResult {
  MatrixD centroids;
  std::vector<std::size_t> assignment;
  std::vector<double> objective;  // sum of squared distances, one entry per Lloyd iteration
  int iterations = 0;
};

/// k-means++ seeding followed by Lloyd iterations until `max_iter` or the
/// largest centroid shift falls below `tolerance`. Empty clusters keep their
/// previous centroid.
KMeansResult kmeans(const MatrixD& points, std::size_t k, Rng& rng, int max_iter = 100,
                    double tolerance = 1e-6);

/// Linear soft-margin SVM, f(x) = w.x + b.
struct LinearSvm {
  Eigen::VectorXd w;
  double b = 0.0;
  double decision(const Eigen::RowVectorXd& x) const { return x.dot(w) + b; }
  /// Unsigned Euclidean distance to the separating hyperplane.
  double distance(const Eigen::RowVectorXd& x) const;
};

/**
 * Minimizes lambda/2 |w|^2 + mean hinge(y (w.x + b)) with an unregularized
 * bias, by SMO on the dual (C = 1 / (lambda n)) with maximal-violating-pair
 * selection. Stops when the KKT violation falls below `tolerance` or after
 * `iterations` pair updates. Labels are +1 / -1.
 */
LinearSvm train_linear_svm(const MatrixD& x, std::span<const int> signs, double lambda,
                           int iterations, double tolerance = 1e-3);

}  // namespace metabalance::resample

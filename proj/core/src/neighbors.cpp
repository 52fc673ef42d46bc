#include "metabalance/resample/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "metabalance/errors.hpp"

namespace metabalance::resample {

namespace {

std::vector<std::size_t> nearest_by(const MatrixD& points, const Eigen::RowVectorXd& q,
                                    std::span<const std::size_t> candidates, std::size_t k,
                                    std::optional<std::size_t> exclude) {
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(candidates.size());
  for (std::size_t idx : candidates) {
    if (exclude && idx == *exclude) continue;
    d.emplace_back((points.row(static_cast<Eigen::Index>(idx)) - q).squaredNorm(), idx);
  }
  const std::size_t take = std::min(k, d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(take), d.end());
  std::vector<std::size_t> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(d[i].second);
  return out;
}

}  // namespace

std::vector<std::size_t> k_nearest(const MatrixD& points, std::size_t query,
                                   std::span<const std::size_t> candidates, std::size_t k) {
  const Eigen::RowVectorXd q = points.row(static_cast<Eigen::Index>(query));
  return nearest_by(points, q, candidates, k, query);
}

std::vector<std::size_t> k_nearest_point(const MatrixD& points, const Eigen::RowVectorXd& query,
                                         std::span<const std::size_t> candidates, std::size_t k) {
  return nearest_by(points, query, candidates, k, std::nullopt);
}

int vote(std::span<const std::size_t> neighbors, std::span<const int> labels) {
  std::map<int, std::size_t> tally;
  for (std::size_t n : neighbors) ++tally[labels[n]];
  int best = -1;
  std::size_t best_count = 0;
  for (const auto& [label, count] : tally)
    if (count > best_count) {
      best = label;
      best_count = count;
    }
  return best;
}

KMeansResult kmeans(const MatrixD& points, std::size_t k, Rng& rng, int max_iter,
                    double tolerance) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k == 0 || k > n)
    throw ConfigError("kmeans: k=" + std::to_string(k) + " invalid for " + std::to_string(n) +
                      " points");
  KMeansResult r;
  r.centroids.resize(static_cast<Eigen::Index>(k), points.cols());

  // k-means++ seeding.
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  r.centroids.row(0) = points.row(static_cast<Eigen::Index>(first(rng)));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      d2[i] = std::min(d2[i], (points.row(ii) - r.centroids.row(static_cast<Eigen::Index>(c - 1))).squaredNorm());
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = unit(rng) * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0 && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = c % n;
    }
    r.centroids.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(pick));
  }

  r.assignment.assign(n, 0);
  for (int it = 0; it < max_iter; ++it) {
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = (points.row(ii) - r.centroids.row(static_cast<Eigen::Index>(c))).squaredNorm();
        if (d < best) {
          best = d;
          r.assignment[i] = c;
        }
      }
      objective += best;
    }
    r.objective.push_back(objective);
    r.iterations = it + 1;

    MatrixD next = MatrixD::Zero(r.centroids.rows(), r.centroids.cols());
    std::vector<std::size_t> members(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      next.row(static_cast<Eigen::Index>(r.assignment[i])) += points.row(static_cast<Eigen::Index>(i));
      ++members[r.assignment[i]];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const auto cc = static_cast<Eigen::Index>(c);
      if (members[c] == 0) {
        next.row(cc) = r.centroids.row(cc);
      } else {
        next.row(cc) /= static_cast<double>(members[c]);
      }
      shift = std::max(shift, (next.row(cc) - r.centroids.row(cc)).norm());
    }
    r.centroids = std::move(next);
    if (shift < tolerance) break;
  }
  return r;
}

double LinearSvm::distance(const Eigen::RowVectorXd& x) const {
  const double norm = w.norm();
  if (norm == 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(decision(x)) / norm;
}

LinearSvm train_linear_svm(const MatrixD& x, std::span<const int> signs, double lambda,
                           int iterations, double tolerance) {
  if (!(lambda > 0.0)) throw ConfigError("svm: regularization must be > 0");
  if (iterations < 1) throw ConfigError("svm: iterations must be >= 1");
  const auto n = x.rows();
  const auto d = x.cols();
  if (static_cast<std::size_t>(n) != signs.size()) throw ConfigError("svm: one sign per row required");
  bool pos = false, neg = false;
  for (int y : signs) (y > 0 ? pos : neg) = true;
  if (!pos || !neg) throw DataError("svm: both signs must be present");

  // Dual: min 1/2 a'Qa - sum a, 0 <= a <= C, y'a = 0, Q_ij = y_i y_j x_i.x_j.
  // The gradient Q_i a - 1 = y_i (x_i.w) - 1 is recomputed from w each pass.
  const double c = 1.0 / (lambda * static_cast<double>(n));
  const Eigen::VectorXd sq = x.rowwise().squaredNorm();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd score(n);
  auto y_of = [&](Eigen::Index i) { return static_cast<double>(signs[static_cast<std::size_t>(i)]); };

  double up = 0.0, low = 0.0;
  for (int it = 0; it < iterations; ++it) {
    score.noalias() = x * w;
    // -y_t G_t = y_t - x_t.w; pick the maximal violating pair.
    Eigen::Index i = -1, j = -1;
    up = -std::numeric_limits<double>::infinity();
    low = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      const double y = y_of(t);
      const double v = y - score(t);
      const bool in_up = (y > 0 && alpha(t) < c) || (y < 0 && alpha(t) > 0.0);
      const bool in_low = (y < 0 && alpha(t) < c) || (y > 0 && alpha(t) > 0.0);
      if (in_up && v > up) up = v, i = t;
      if (in_low && v < low) low = v, j = t;
    }
    if (i < 0 || j < 0 || up - low < tolerance) break;
    const double curvature = std::max(sq(i) + sq(j) - 2.0 * x.row(i).dot(x.row(j)), 1e-12);
    double step = (up - low) / curvature;
    // alpha_i moves by y_i step, alpha_j by -y_j step; stay inside the box.
    const double yi = y_of(i), yj = y_of(j);
    step = std::min(step, yi > 0 ? c - alpha(i) : alpha(i));
    step = std::min(step, yj > 0 ? alpha(j) : c - alpha(j));
    alpha(i) += yi * step;
    alpha(j) -= yj * step;
    w.noalias() += step * (x.row(i) - x.row(j)).transpose();
  }

  // Bias from free support vectors (y_t (x_t.w + b) = 1); otherwise the midpoint.
  score.noalias() = x * w;
  double sum = 0.0;
  int free = 0;
  for (Eigen::Index t = 0; t < n; ++t)
    if (alpha(t) > 0.0 && alpha(t) < c) {
      sum += y_of(t) - score(t);
      ++free;
    }
  LinearSvm svm;
  svm.w = std::move(w);
  svm.b = free > 0 ? sum / free : 0.5 * (up + low);
  return svm;
}

}  // namespace metabalance::resample

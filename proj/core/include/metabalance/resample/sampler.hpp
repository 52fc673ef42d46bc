#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metabalance/data/dataset.hpp"
#include "metabalance/random.hpp"

namespace metabalance::resample {

using data::Dataset;
using ad::MatrixD;

enum class SamplerKind {
  natural,
  random_over,
  random_under,
  smote,
  borderline_smote,
  svm_smote,
  adasyn,
  enn,
  all_knn,
  near_miss,
  cluster_centroids,
  smote_enn,
  mixup,
};

std::string to_string(SamplerKind kind);
/// Accepts the canonical names plus the short aliases "naive", "over", "under", "cc".
SamplerKind sampler_kind_from_string(const std::string& name);
const std::vector<SamplerKind>& all_sampler_kinds();

/// Oversamplers that interpolate between same-class neighbours.
bool is_smote_family(SamplerKind kind);
/// Kinds that draw balanced batches directly instead of materializing a dataset.
bool is_balancing_draw(SamplerKind kind);
/// Kinds whose output depends on the seed.
bool is_stochastic(SamplerKind kind);

struct SvmParams {
  double regularization = 1e-2;
  int iterations = 100000;  // SMO pair-update cap
  bool operator==(const SvmParams&) const = default;
};

struct SamplerSpec {
  SamplerKind kind = SamplerKind::natural;
  int k_neighbors = 0;  // 0 selects the kind's default
  double mixup_alpha = 1.0;
  SvmParams svm;
  std::uint64_t seed = 0;

  /// 5 for SMOTE / Borderline / SVM-SMOTE / ADASYN / SMOTE-ENN, 3 for ENN / AllKNN / NearMiss.
  int effective_k() const;
  void validate() const;
  bool operator==(const SamplerSpec&) const = default;
};

inline SamplerSpec make_sampler(SamplerKind kind, std::uint64_t seed = 0) {
  SamplerSpec s;
  s.kind = kind;
  s.seed = seed;
  return s;
}

/// Where an output row came from.
struct Origin {
  enum class Kind { original, synthetic, centroid };
  Kind kind = Kind::original;
  std::size_t a = 0;  // original row, first parent (base), or cluster index
  std::size_t b = 0;  // second parent (neighbour) for synthetic rows
  double lambda = 0.0;
  bool extrapolated = false;  // synthetic row x_a + lambda (x_a - x_b)

  static Origin original(std::size_t row) { return {Kind::original, row, row, 0.0, false}; }
  std::string describe() const;
};

struct Resampled {
  Dataset data;
  std::vector<Origin> origin;  // one per output row
  std::vector<std::string> warnings;
};

/// Whole-dataset transform for `spec.kind`; natural is the identity.
Resampled apply(const Dataset& ds, const SamplerSpec& spec);

Resampled random_over(const Dataset& ds, std::uint64_t seed);
Resampled random_under(const Dataset& ds, std::uint64_t seed);

/// Synthetic point base + lambda (neighbour - base).
Eigen::RowVectorXd interpolate(const Eigen::RowVectorXd& base, const Eigen::RowVectorXd& neighbour,
                               double lambda);

/**
 * Every class below the majority count is topped up with points
 * x_i + lambda (x_nn - x_i), lambda ~ U[0, 1), x_nn one of the k nearest
 * same-class neighbours of a uniformly chosen x_i.
 */
Resampled smote(const Dataset& ds, int k, std::uint64_t seed);

/// SMOTE restricted to "danger" bases: k/2 <= (# other-class neighbours) < k.
Resampled borderline_smote(const Dataset& ds, int k, std::uint64_t seed);

/// Minority support vectors of a one-vs-rest linear SVM as bases; bases with
/// mostly same-class neighbourhoods extrapolate away from the neighbour.
Resampled svm_smote(const Dataset& ds, int k, const SvmParams& svm, std::uint64_t seed);

/// Per-base synthesis counts proportional to the base's other-class
/// neighbour fraction.
Resampled adasyn(const Dataset& ds, int k, std::uint64_t seed);

/// Which classes an ENN pass may remove points from.
enum class CleanClasses { all_but_minority, all };

/// Removes points of the cleaned classes whose k nearest neighbours (over the
/// input, excluding the point) vote for a different class.
Resampled enn(const Dataset& ds, int k, CleanClasses clean = CleanClasses::all_but_minority);

/// ENN repeated for k = 1 .. max_k, each pass on the previous output.
Resampled all_knn(const Dataset& ds, int max_k);

/// NearMiss-1: keeps the points of each larger class with the smallest mean
/// distance to their k nearest minority points, down to the minority count.
Resampled near_miss(const Dataset& ds, int k = 3);

/// Replaces every larger class by k-means centroids, k = minority count.
Resampled cluster_centroids(const Dataset& ds, std::uint64_t seed);

/// SMOTE followed by ENN cleaning every class.
Resampled smote_enn(const Dataset& ds, int k, std::uint64_t seed, int enn_k = 3);

struct MixupBatch {
  MatrixD x;
  MatrixD y;  // soft labels
  double lambda = 1.0;
  std::vector<std::size_t> permutation;
};

/// x~ = lambda x_i + (1 - lambda) x_perm(i), same for labels.
MixupBatch mix(const MatrixD& x, const MatrixD& y, double lambda,
               std::vector<std::size_t> permutation);
/// lambda ~ Beta(alpha, alpha), permutation uniformly random.
MixupBatch mixup_batch(const MatrixD& x, const MatrixD& y, double alpha, Rng& rng);
/// Beta(a, b) draw via two gamma variates.
double sample_beta(double a, double b, Rng& rng);

/// Mixup over the whole dataset as one batch; output carries soft labels.
Resampled mixup(const Dataset& ds, double alpha, std::uint64_t seed);

}  // namespace metabalance::resample

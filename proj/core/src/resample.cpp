#include "metabalance/resample/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "metabalance/errors.hpp"
#include "metabalance/resample/neighbors.hpp"

namespace metabalance::resample {

namespace {

struct KindName {
  SamplerKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {SamplerKind::natural, "natural"},
    {SamplerKind::random_over, "random_over"},
    {SamplerKind::random_under, "random_under"},
    {SamplerKind::smote, "smote"},
    {SamplerKind::borderline_smote, "borderline_smote"},
    {SamplerKind::svm_smote, "svm_smote"},
    {SamplerKind::adasyn, "adasyn"},
    {SamplerKind::enn, "enn"},
    {SamplerKind::all_knn, "all_knn"},
    {SamplerKind::near_miss, "near_miss"},
    {SamplerKind::cluster_centroids, "cluster_centroids"},
    {SamplerKind::smote_enn, "smote_enn"},
    {SamplerKind::mixup, "mixup"},
};

/// Accumulates output rows with their provenance.
class Builder {
 public:
  explicit Builder(const Dataset& src) : src_(src) {}

  void keep(std::size_t row) {
    rows_.push_back(src_.features.row(static_cast<Eigen::Index>(row)));
    labels_.push_back(src_.labels[row]);
    origin_.push_back(Origin::original(row));
  }

  void add(Eigen::RowVectorXd x, int label, Origin origin) {
    rows_.push_back(std::move(x));
    labels_.push_back(label);
    origin_.push_back(origin);
  }

  Resampled finish(std::vector<std::string> warnings = {}) {
    MatrixD x(static_cast<Eigen::Index>(rows_.size()), src_.features.cols());
    for (std::size_t i = 0; i < rows_.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = rows_[i];
    Resampled r;
    r.data = Dataset::from(std::move(x), std::move(labels_), src_.num_classes, src_.feature_names);
    r.origin = std::move(origin_);
    r.warnings = std::move(warnings);
    for (const auto& w : r.warnings) spdlog::warn("{}", w);
    return r;
  }

 private:
  const Dataset& src_;
  std::vector<Eigen::RowVectorXd> rows_;
  std::vector<int> labels_;
  std::vector<Origin> origin_;
};

std::vector<std::size_t> all_rows(const Dataset& ds) {
  std::vector<std::size_t> rows(ds.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

Resampled identity(const Dataset& ds) {
  Builder b(ds);
  for (std::size_t i = 0; i < ds.size(); ++i) b.keep(i);
  return b.finish();
}

void require_classes(const Dataset& ds, const char* who) {
  std::size_t present = 0;
  for (const auto& [c, n] : ds.class_counts)
    if (n > 0) ++present;
  if (present < 2)
    throw DataError(std::string(who) + ": needs at least two non-empty classes");
}

/// Classes strictly below the majority count (and non-empty).
std::vector<int> classes_to_grow(const Dataset& ds) {
  const std::size_t target = ds.count(ds.majority_class());
  std::vector<int> out;
  for (const auto& [c, n] : ds.class_counts)
    if (n > 0 && n < target) out.push_back(c);
  return out;
}

/// Classes strictly above the minority count.
std::vector<int> classes_to_shrink(const Dataset& ds) {
  const std::size_t target = ds.count(ds.minority_class());
  std::vector<int> out;
  for (const auto& [c, n] : ds.class_counts)
    if (n > target) out.push_back(c);
  return out;
}

void require_k(const Dataset& ds, int c, int k, const char* who) {
  if (k < 1) throw ConfigError(std::string(who) + ": k_neighbors must be >= 1");
  const std::size_t n = ds.count(c);
  if (n <= static_cast<std::size_t>(k))
    throw ConfigError(std::string(who) + ": class " + std::to_string(c) + " has " +
                      std::to_string(n) + " rows; k_neighbors=" + std::to_string(k) +
                      " needs more than k");
}

/// Number of the k nearest neighbours (over the whole dataset) not in `row`'s class.
std::size_t other_class_neighbours(const Dataset& ds, std::size_t row, std::size_t k,
                                   const std::vector<std::size_t>& everyone) {
  std::size_t m = 0;
  for (std::size_t nb : k_nearest(ds.features, row, everyone, k))
    if (ds.labels[nb] != ds.labels[row]) ++m;
  return m;
}

/**
 * Generates synthetic points for class `c`. `counts[i]` points are based on
 * `bases[i]`; neighbours are among the k nearest same-class rows.
 */
void synthesize(const Dataset& ds, int c, const std::vector<std::size_t>& bases,
                const std::vector<std::size_t>& counts, const std::vector<bool>& extrapolate,
                std::size_t k, Rng& rng, Builder& out, std::vector<std::string>& warnings) {
  const auto same = ds.rows_of_class(c);
  std::uniform_int_distribution<std::size_t> pick_nb(0, k - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  bool all_coincide = true;
  std::size_t made = 0;
  for (std::size_t bi = 0; bi < bases.size(); ++bi) {
    if (counts[bi] == 0) continue;
    const std::size_t base = bases[bi];
    const auto nbs = k_nearest(ds.features, base, same, k);
    const Eigen::RowVectorXd xb = ds.features.row(static_cast<Eigen::Index>(base));
    for (std::size_t j = 0; j < counts[bi]; ++j) {
      const std::size_t nb = nbs[pick_nb(rng) % nbs.size()];
      const Eigen::RowVectorXd xn = ds.features.row(static_cast<Eigen::Index>(nb));
      if ((xn - xb).squaredNorm() > 0.0) all_coincide = false;
      const double lambda = unit(rng);
      Origin o{Origin::Kind::synthetic, base, nb, lambda, extrapolate[bi]};
      if (extrapolate[bi])
        out.add(xb + lambda * (xb - xn), c, o);
      else
        out.add(interpolate(xb, xn, lambda), c, o);
      ++made;
    }
  }
  if (made > 0 && all_coincide)
    warnings.push_back("class " + std::to_string(c) +
                       ": all neighbours coincide with their bases; synthetic points duplicate "
                       "originals");
}

/// Uniform base choice: draws `need` bases with replacement from `bases`.
std::vector<std::size_t> uniform_counts(std::size_t n_bases, std::size_t need, Rng& rng) {
  std::vector<std::size_t> counts(n_bases, 0);
  std::uniform_int_distribution<std::size_t> pick(0, n_bases - 1);
  for (std::size_t i = 0; i < need; ++i) ++counts[pick(rng)];
  return counts;
}

Resampled smote_impl(const Dataset& ds, int k, std::uint64_t seed, const char* who) {
  require_classes(ds, who);
  const auto grow = classes_to_grow(ds);
  for (int c : grow) require_k(ds, c, k, who);
  Rng rng(seed);
  Builder out(ds);
  for (std::size_t i = 0; i < ds.size(); ++i) out.keep(i);
  std::vector<std::string> warnings;
  const std::size_t target = ds.count(ds.majority_class());
  for (int c : grow) {
    const auto bases = ds.rows_of_class(c);
    const auto counts = uniform_counts(bases.size(), target - bases.size(), rng);
    synthesize(ds, c, bases, counts, std::vector<bool>(bases.size(), false),
               static_cast<std::size_t>(k), rng, out, warnings);
  }
  return out.finish(std::move(warnings));
}

}  // namespace

std::string to_string(SamplerKind kind) {
  for (const auto& kn : kKindNames)
    if (kn.kind == kind) return kn.name;
  return "unknown";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
  for (const auto& kn : kKindNames)
    if (name == kn.name) return kn.kind;
  if (name == "naive") return SamplerKind::natural;
  if (name == "over") return SamplerKind::random_over;
  if (name == "under") return SamplerKind::random_under;
  if (name == "cc") return SamplerKind::cluster_centroids;
  throw ConfigError("unknown sampler kind '" + name + "'");
}

const std::vector<SamplerKind>& all_sampler_kinds() {
  static const std::vector<SamplerKind> kinds = [] {
    std::vector<SamplerKind> v;
    for (const auto& kn : kKindNames) v.push_back(kn.kind);
    return v;
  }();
  return kinds;
}

bool is_smote_family(SamplerKind kind) {
  return kind == SamplerKind::smote || kind == SamplerKind::borderline_smote ||
         kind == SamplerKind::svm_smote || kind == SamplerKind::adasyn ||
         kind == SamplerKind::smote_enn;
}

bool is_balancing_draw(SamplerKind kind) {
  return kind == SamplerKind::random_over || kind == SamplerKind::random_under;
}

bool is_stochastic(SamplerKind kind) {
  return !(kind == SamplerKind::natural || kind == SamplerKind::enn ||
           kind == SamplerKind::all_knn || kind == SamplerKind::near_miss);
}

int SamplerSpec::effective_k() const {
  if (k_neighbors > 0) return k_neighbors;
  switch (kind) {
    case SamplerKind::enn:
    case SamplerKind::all_knn:
    case SamplerKind::near_miss:
      return 3;
    default:
      return 5;
  }
}

void SamplerSpec::validate() const {
  if (k_neighbors < 0) throw ConfigError("sampler: k_neighbors must be >= 1");
  if (kind == SamplerKind::mixup && !(mixup_alpha > 0.0 && std::isfinite(mixup_alpha)))
    throw ConfigError("sampler: mixup_alpha must be > 0");
  if (kind == SamplerKind::svm_smote) {
    if (!(svm.regularization > 0.0)) throw ConfigError("sampler: svm regularization must be > 0");
    if (svm.iterations < 1) throw ConfigError("sampler: svm iterations must be >= 1");
  }
}

std::string Origin::describe() const {
  std::ostringstream s;
  switch (kind) {
    case Kind::original:
      s << "row:" << a;
      break;
    case Kind::synthetic:
      s << (extrapolated ? "extrapolate:" : "interpolate:") << a << ':' << b << ':' << lambda;
      break;
    case Kind::centroid:
      s << "centroid:" << a;
      break;
  }
  return s.str();
}

Eigen::RowVectorXd interpolate(const Eigen::RowVectorXd& base, const Eigen::RowVectorXd& neighbour,
                               double lambda) {
  return base + lambda * (neighbour - base);
}

Resampled apply(const Dataset& ds, const SamplerSpec& spec) {
  spec.validate();
  const int k = spec.effective_k();
  switch (spec.kind) {
    case SamplerKind::natural: return identity(ds);
    case SamplerKind::random_over: return random_over(ds, spec.seed);
    case SamplerKind::random_under: return random_under(ds, spec.seed);
    case SamplerKind::smote: return smote(ds, k, spec.seed);
    case SamplerKind::borderline_smote: return borderline_smote(ds, k, spec.seed);
    case SamplerKind::svm_smote: return svm_smote(ds, k, spec.svm, spec.seed);
    case SamplerKind::adasyn: return adasyn(ds, k, spec.seed);
    case SamplerKind::enn: return enn(ds, k);
    case SamplerKind::all_knn: return all_knn(ds, k);
    case SamplerKind::near_miss: return near_miss(ds, k);
    case SamplerKind::cluster_centroids: return cluster_centroids(ds, spec.seed);
    case SamplerKind::smote_enn: return smote_enn(ds, k, spec.seed);
    case SamplerKind::mixup: return mixup(ds, spec.mixup_alpha, spec.seed);
  }
  throw ConfigError("sampler: unhandled kind");
}

Resampled random_over(const Dataset& ds, std::uint64_t seed) {
  require_classes(ds, "random_over");
  Rng rng(seed);
  Builder out(ds);
  for (std::size_t i = 0; i < ds.size(); ++i) out.keep(i);
  const std::size_t target = ds.count(ds.majority_class());
  for (int c : classes_to_grow(ds)) {
    const auto rows = ds.rows_of_class(c);
    std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
    for (std::size_t j = rows.size(); j < target; ++j) out.keep(rows[pick(rng)]);
  }
  return out.finish();
}

Resampled random_under(const Dataset& ds, std::uint64_t seed) {
  require_classes(ds, "random_under");
  Rng rng(seed);
  const std::size_t target = ds.count(ds.minority_class());
  std::vector<std::size_t> keep;
  for (const auto& [c, n] : ds.class_counts) {
    auto rows = ds.rows_of_class(c);
    if (n > target) {
      std::shuffle(rows.begin(), rows.end(), rng);
      rows.resize(target);
    }
    keep.insert(keep.end(), rows.begin(), rows.end());
  }
  std::sort(keep.begin(), keep.end());
  Builder out(ds);
  for (std::size_t r : keep) out.keep(r);
  return out.finish();
}

Resampled smote(const Dataset& ds, int k, std::uint64_t seed) {
  return smote_impl(ds, k, seed, "smote");
}

Resampled borderline_smote(const Dataset& ds, int k, std::uint64_t seed) {
  require_classes(ds, "borderline_smote");
  const auto grow = classes_to_grow(ds);
  for (int c : grow) require_k(ds, c, k, "borderline_smote");
  const auto everyone = all_rows(ds);
  const auto kk = static_cast<std::size_t>(k);

  std::vector<std::vector<std::size_t>> danger(grow.size());
  bool any = false;
  for (std::size_t gi = 0; gi < grow.size(); ++gi) {
    for (std::size_t row : ds.rows_of_class(grow[gi])) {
      const std::size_t m = other_class_neighbours(ds, row, kk, everyone);
      if (2 * m >= kk && m < kk) danger[gi].push_back(row);
    }
    any = any || !danger[gi].empty();
  }
  if (!any) {
    auto r = smote_impl(ds, k, seed, "borderline_smote");
    r.warnings.insert(r.warnings.begin(), "borderline_smote: no danger points; fell back to smote");
    spdlog::warn("{}", r.warnings.front());
    return r;
  }

  Rng rng(seed);
  Builder out(ds);
  for (std::size_t i = 0; i < ds.size(); ++i) out.keep(i);
  std::vector<std::string> warnings;
  const std::size_t target = ds.count(ds.majority_class());
  for (std::size_t gi = 0; gi < grow.size(); ++gi) {
    const int c = grow[gi];
    auto bases = danger[gi];
    if (bases.empty()) {
      warnings.push_back("borderline_smote: class " + std::to_string(c) +
                         " has no danger points; using every class row as a base");
      bases = ds.rows_of_class(c);
    }
    const auto counts = uniform_counts(bases.size(), target - ds.count(c), rng);
    synthesize(ds, c, bases, counts, std::vector<bool>(bases.size(), false), kk, rng, out,
               warnings);
  }
  return out.finish(std::move(warnings));
}

Resampled svm_smote(const Dataset& ds, int k, const SvmParams& svm, std::uint64_t seed) {
  require_classes(ds, "svm_smote");
  const auto grow = classes_to_grow(ds);
  for (int c : grow) require_k(ds, c, k, "svm_smote");
  const auto everyone = all_rows(ds);
  const auto kk = static_cast<std::size_t>(k);

  std::vector<std::vector<std::size_t>> support(grow.size());
  bool any = false;
  for (std::size_t gi = 0; gi < grow.size(); ++gi) {
    std::vector<int> signs(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) signs[i] = ds.labels[i] == grow[gi] ? 1 : -1;
    const LinearSvm model = train_linear_svm(ds.features, signs, svm.regularization, svm.iterations);
    for (std::size_t row : ds.rows_of_class(grow[gi]))
      if (model.decision(ds.features.row(static_cast<Eigen::Index>(row))) <= 1.0)
        support[gi].push_back(row);
    any = any || !support[gi].empty();
  }
  if (!any) {
    auto r = smote_impl(ds, k, seed, "svm_smote");
    r.warnings.insert(r.warnings.begin(), "svm_smote: no minority support vectors; fell back to smote");
    spdlog::warn("{}", r.warnings.front());
    return r;
  }

  Rng rng(seed);
  Builder out(ds);
  for (std::size_t i = 0; i < ds.size(); ++i) out.keep(i);
  std::vector<std::string> warnings;
  const std::size_t target = ds.count(ds.majority_class());
  for (std::size_t gi = 0; gi < grow.size(); ++gi) {
    const int c = grow[gi];
    auto bases = support[gi];
    if (bases.empty()) {
      warnings.push_back("svm_smote: class " + std::to_string(c) +
                         " has no support vectors; using every class row as a base");
      bases = ds.rows_of_class(c);
    }
    std::vector<bool> extrapolate(bases.size());
    for (std::size_t i = 0; i < bases.size(); ++i) {
      const std::size_t m = other_class_neighbours(ds, bases[i], kk, everyone);
      extrapolate[i] = 2 * m < kk;
    }
    const auto counts = uniform_counts(bases.size(), target - ds.count(c), rng);
    synthesize(ds, c, bases, counts, extrapolate, kk, rng, out, warnings);
  }
  return out.finish(std::move(warnings));
}

Resampled adasyn(const Dataset& ds, int k, std::uint64_t seed) {
  require_classes(ds, "adasyn");
  const auto grow = classes_to_grow(ds);
  for (int c : grow) require_k(ds, c, k, "adasyn");
  const auto everyone = all_rows(ds);
  const auto kk = static_cast<std::size_t>(k);
  const std::size_t target = ds.count(ds.majority_class());

  Rng rng(seed);
  Builder out(ds);
  for (std::size_t i = 0; i < ds.size(); ++i) out.keep(i);
  std::vector<std::string> warnings;
  for (int c : grow) {
    const auto bases = ds.rows_of_class(c);
    std::vector<double> ratio(bases.size());
    double total = 0.0;
    for (std::size_t i = 0; i < bases.size(); ++i) {
      ratio[i] = static_cast<double>(other_class_neighbours(ds, bases[i], kk, everyone)) /
                 static_cast<double>(kk);
      total += ratio[i];
    }
    const std::size_t need = target - bases.size();
    std::vector<std::size_t> counts(bases.size(), 0);
    if (total == 0.0) {
      warnings.push_back("adasyn: class " + std::to_string(c) +
                         " has no other-class neighbours; fell back to uniform smote allocation");
      counts = uniform_counts(bases.size(), need, rng);
    } else {
      for (std::size_t i = 0; i < bases.size(); ++i)
        counts[i] = static_cast<std::size_t>(std::llround(ratio[i] / total * static_cast<double>(need)));
    }
    synthesize(ds, c, bases, counts, std::vector<bool>(bases.size(), false), kk, rng, out,
               warnings);
  }
  return out.finish(std::move(warnings));
}

Resampled enn(const Dataset& ds, int k, CleanClasses clean) {
  require_classes(ds, "enn");
  if (k < 1) throw ConfigError("enn: k must be >= 1");
  const int minority = ds.minority_class();
  const auto everyone = all_rows(ds);
  std::vector<bool> removed(ds.size(), false);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (clean == CleanClasses::all_but_minority && ds.labels[i] == minority) continue;
    const auto nbs = k_nearest(ds.features, i, everyone, static_cast<std::size_t>(k));
    if (vote(nbs, ds.labels) != ds.labels[i]) removed[i] = true;
  }
  std::map<int, std::size_t> left;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (!removed[i]) ++left[ds.labels[i]];
  for (const auto& [c, n] : ds.class_counts)
    if (n > 0 && left[c] == 0)
      throw DataError("enn: removal would empty class " + std::to_string(c));
  Builder out(ds);
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (!removed[i]) out.keep(i);
  return out.finish();
}

Resampled all_knn(const Dataset& ds, int max_k) {
  if (max_k < 1) throw ConfigError("all_knn: max_k must be >= 1");
  Resampled current = identity(ds);
  for (int k = 1; k <= max_k; ++k) {
    Resampled next = enn(current.data, k);
    for (auto& o : next.origin) o = current.origin[o.a];
    current = std::move(next);
  }
  return current;
}

Resampled near_miss(const Dataset& ds, int k) {
  require_classes(ds, "near_miss");
  if (k < 1) throw ConfigError("near_miss: k must be >= 1");
  const int minority = ds.minority_class();
  const auto minority_rows = ds.rows_of_class(minority);
  const std::size_t target = minority_rows.size();
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), minority_rows.size());
  std::vector<std::size_t> keep;
  for (const auto& [c, n] : ds.class_counts) {
    auto rows = ds.rows_of_class(c);
    if (n > target) {
      std::vector<std::pair<double, std::size_t>> score;
      for (std::size_t r : rows) {
        const Eigen::RowVectorXd x = ds.features.row(static_cast<Eigen::Index>(r));
        double d = 0.0;
        for (std::size_t nb : k_nearest_point(ds.features, x, minority_rows, kk))
          d += (ds.features.row(static_cast<Eigen::Index>(nb)) - x).norm();
        score.emplace_back(d / static_cast<double>(kk), r);
      }
      std::sort(score.begin(), score.end());
      rows.clear();
      for (std::size_t i = 0; i < target; ++i) rows.push_back(score[i].second);
    }
    keep.insert(keep.end(), rows.begin(), rows.end());
  }
  std::sort(keep.begin(), keep.end());
  Builder out(ds);
  for (std::size_t r : keep) out.keep(r);
  return out.finish();
}

Resampled cluster_centroids(const Dataset& ds, std::uint64_t seed) {
  require_classes(ds, "cluster_centroids");
  const std::size_t target = ds.count(ds.minority_class());
  const auto shrink = classes_to_shrink(ds);
  Builder out(ds);
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (std::find(shrink.begin(), shrink.end(), ds.labels[i]) == shrink.end()) out.keep(i);
  for (int c : shrink) {
    const auto rows = ds.rows_of_class(c);
    if (target > rows.size())
      throw ConfigError("cluster_centroids: k=" + std::to_string(target) + " exceeds class " +
                        std::to_string(c) + " size " + std::to_string(rows.size()));
    MatrixD pts(static_cast<Eigen::Index>(rows.size()), ds.features.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
      pts.row(static_cast<Eigen::Index>(i)) = ds.features.row(static_cast<Eigen::Index>(rows[i]));
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    const KMeansResult km = kmeans(pts, target, rng);
    for (std::size_t j = 0; j < target; ++j)
      out.add(km.centroids.row(static_cast<Eigen::Index>(j)), c,
              Origin{Origin::Kind::centroid, j, 0, 0.0, false});
  }
  return out.finish();
}

Resampled smote_enn(const Dataset& ds, int k, std::uint64_t seed, int enn_k) {
  Resampled over = smote_impl(ds, k, seed, "smote_enn");
  Resampled cleaned = enn(over.data, enn_k, CleanClasses::all);
  for (auto& o : cleaned.origin) o = over.origin[o.a];
  cleaned.warnings.insert(cleaned.warnings.begin(), over.warnings.begin(), over.warnings.end());
  return cleaned;
}

MixupBatch mix(const MatrixD& x, const MatrixD& y, double lambda,
               std::vector<std::size_t> permutation) {
  if (permutation.size() != static_cast<std::size_t>(x.rows()) || x.rows() != y.rows())
    throw ConfigError("mixup: permutation / label rows do not match the batch");
  MixupBatch b;
  b.lambda = lambda;
  b.x.resize(x.rows(), x.cols());
  b.y.resize(y.rows(), y.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto j = static_cast<Eigen::Index>(permutation[static_cast<std::size_t>(i)]);
    b.x.row(i) = lambda * x.row(i) + (1.0 - lambda) * x.row(j);
    b.y.row(i) = lambda * y.row(i) + (1.0 - lambda) * y.row(j);
  }
  b.permutation = std::move(permutation);
  return b;
}

double sample_beta(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  if (x + y == 0.0) return 0.5;
  return x / (x + y);
}

MixupBatch mixup_batch(const MatrixD& x, const MatrixD& y, double alpha, Rng& rng) {
  if (!(alpha > 0.0)) throw ConfigError("mixup: alpha must be > 0");
  const double lambda = sample_beta(alpha, alpha, rng);
  std::vector<std::size_t> perm(static_cast<std::size_t>(x.rows()));
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  return mix(x, y, lambda, std::move(perm));
}

Resampled mixup(const Dataset& ds, double alpha, std::uint64_t seed) {
  Rng rng(seed);
  MixupBatch b = mixup_batch(ds.features, ds.label_matrix(), alpha, rng);
  Resampled r;
  std::vector<int> labels(ds.size());
  for (Eigen::Index i = 0; i < b.y.rows(); ++i) {
    Eigen::Index best = 0;
    b.y.row(i).maxCoeff(&best);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  r.data = Dataset::from(std::move(b.x), std::move(labels), ds.num_classes, ds.feature_names);
  r.data.soft_labels = std::move(b.y);
  r.data.validate();
  for (std::size_t i = 0; i < ds.size(); ++i)
    r.origin.push_back(Origin{Origin::Kind::synthetic, i, b.permutation[i], b.lambda, false});
  return r;
}

}  // namespace metabalance::resample

#include "metabalance/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "metabalance/errors.hpp"

namespace metabalance::eval {

namespace {

void check_sizes(std::size_t a, std::size_t b, const char* who) {
  if (a != b)
    throw ConfigError(std::string(who) + ": " + std::to_string(a) + " scores but " +
                      std::to_string(b) + " labels");
}

std::string number(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_sizes(scores.size(), labels.size(), "roc_auc");
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    // Ranks i+1 .. j share their average.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t)
      if (labels[idx[t]] == 1) {
        positive_rank_sum += rank;
        ++positives;
      }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0)
    throw DataError("roc_auc: labels contain a single class");
  const double np = static_cast<double>(positives);
  const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(negatives));
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_sizes(scores.size(), labels.size(), "roc_curve");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t pos = 0;
  for (int l : labels) pos += l == 1 ? 1 : 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw DataError("roc_curve: labels contain a single class");

  std::vector<RocPoint> out{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    const double s = scores[idx[i]];
    while (i < idx.size() && scores[idx[i]] == s) {
      (labels[idx[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    out.push_back({s, static_cast<double>(fp) / static_cast<double>(neg),
                   static_cast<double>(tp) / static_cast<double>(pos)});
  }
  return out;
}

void write_roc_csv(const std::filesystem::path& path, const std::vector<RocPoint>& points) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "threshold,fpr,tpr\n";
  for (const auto& p : points) out << number(p.threshold) << ',' << number(p.fpr) << ',' << number(p.tpr) << '\n';
}

MetricsReport per_class_accuracy(std::span<const int> predictions, std::span<const int> labels,
                                 int num_classes) {
  check_sizes(predictions.size(), labels.size(), "per_class_accuracy");
  if (num_classes < 1) throw ConfigError("per_class_accuracy: num_classes must be >= 1");
  MetricsReport r;
  r.n_test = labels.size();
  r.confusion = Confusion::Zero(num_classes, num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes || predictions[i] < 0 || predictions[i] >= num_classes)
      throw DataError("per_class_accuracy: class index out of range at row " + std::to_string(i));
    ++r.confusion(labels[i], predictions[i]);
  }
  double sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    const auto total = r.confusion.row(c).sum();
    if (total == 0) continue;
    r.per_class_accuracy[c] = static_cast<double>(r.confusion(c, c)) / static_cast<double>(total);
    sum += r.per_class_accuracy[c];
  }
  if (r.n_test > 0) {
    r.overall_accuracy = static_cast<double>(r.confusion.trace()) / static_cast<double>(r.n_test);
    r.balanced_accuracy = sum / static_cast<double>(r.per_class_accuracy.size());
  }
  return r;
}

std::string MetricsReport::to_json() const {
  std::ostringstream s;
  s << "{\n  \"roc_auc\": " << (roc_auc ? number(*roc_auc) : "null") << ",\n"
    << "  \"overall_accuracy\": " << number(overall_accuracy) << ",\n"
    << "  \"balanced_accuracy\": " << number(balanced_accuracy) << ",\n"
    << "  \"n_test\": " << n_test << ",\n  \"per_class_accuracy\": {";
  bool first = true;
  for (const auto& [c, a] : per_class_accuracy) {
    s << (first ? "" : ", ") << '"' << c << "\": " << number(a);
    first = false;
  }
  s << "},\n  \"confusion\": [";
  for (Eigen::Index i = 0; i < confusion.rows(); ++i) {
    s << (i ? ", " : "") << '[';
    for (Eigen::Index j = 0; j < confusion.cols(); ++j) s << (j ? ", " : "") << confusion(i, j);
    s << ']';
  }
  s << "]\n}\n";
  return s.str();
}

void MetricsReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "metric,value\n";
  if (roc_auc) out << "roc_auc," << number(*roc_auc) << '\n';
  out << "overall_accuracy," << number(overall_accuracy) << '\n'
      << "balanced_accuracy," << number(balanced_accuracy) << '\n'
      << "n_test," << n_test << '\n';
  for (const auto& [c, a] : per_class_accuracy) out << "accuracy_class_" << c << ',' << number(a) << '\n';
  for (Eigen::Index i = 0; i < confusion.rows(); ++i)
    for (Eigen::Index j = 0; j < confusion.cols(); ++j)
      out << "confusion_" << i << '_' << j << ',' << confusion(i, j) << '\n';
}

std::vector<int> prior_adjust(const MatrixD& class_scores, std::span<const double> train_frequencies) {
  if (static_cast<std::size_t>(class_scores.cols()) != train_frequencies.size())
    throw ConfigError("prior_adjust: " + std::to_string(class_scores.cols()) + " score columns but " +
                      std::to_string(train_frequencies.size()) + " frequencies");
  for (std::size_t c = 0; c < train_frequencies.size(); ++c)
    if (!(train_frequencies[c] > 0.0))
      throw ConfigError("prior_adjust: class " + std::to_string(c) + " has non-positive frequency");
  std::vector<int> out(static_cast<std::size_t>(class_scores.rows()));
  for (Eigen::Index i = 0; i < class_scores.rows(); ++i) {
    int best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < class_scores.cols(); ++c) {
      const double v = class_scores(i, c) / train_frequencies[static_cast<std::size_t>(c)];
      if (v > best_value) {
        best_value = v;
        best = static_cast<int>(c);
      }
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

MatrixD binary_class_scores(std::span<const double> positive_scores) {
  MatrixD out(static_cast<Eigen::Index>(positive_scores.size()), 2);
  for (std::size_t i = 0; i < positive_scores.size(); ++i) {
    out(static_cast<Eigen::Index>(i), 0) = 1.0 - positive_scores[i];
    out(static_cast<Eigen::Index>(i), 1) = positive_scores[i];
  }
  return out;
}

std::vector<int> threshold_predictions(std::span<const double> scores, double threshold) {
  std::vector<int> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > threshold ? 1 : 0;
  return out;
}

ThresholdMatch threshold_match(std::span<const double> scores, std::span<const int> labels,
                               double target, int majority_class) {
  check_sizes(scores.size(), labels.size(), "threshold_match");
  if (!(target >= 0.0 && target <= 1.0)) throw ConfigError("threshold_match: target must be in [0, 1]");
  if (majority_class != 0 && majority_class != 1)
    throw ConfigError("threshold_match: majority class must be 0 or 1");
  std::vector<double> distinct(scores.begin(), scores.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> candidates{-std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
    candidates.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
  candidates.push_back(std::numeric_limits<double>::infinity());

  std::size_t majority_total = 0;
  for (int l : labels) majority_total += l == majority_class ? 1 : 0;

  ThresholdMatch best;
  double best_gap = std::numeric_limits<double>::infinity();
  for (double t : candidates) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (labels[i] == majority_class && (scores[i] > t ? 1 : 0) == majority_class) ++correct;
    const double acc = majority_total == 0 ? 0.0
                                           : static_cast<double>(correct) / static_cast<double>(majority_total);
    const double gap = std::abs(acc - target);
    if (gap < best_gap) {  // candidates ascend, so ties keep the lower threshold
      best_gap = gap;
      best.threshold = t;
      best.majority_accuracy = acc;
    }
  }
  const auto predictions = threshold_predictions(scores, best.threshold);
  best.report = per_class_accuracy(predictions, labels, 2);
  return best;
}

}  // namespace metabalance::eval

#include "metabalance/data/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "metabalance/errors.hpp"
#include "metabalance/random.hpp"
#include "metabalance/serialize.hpp"

namespace metabalance::data {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delim) {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_cell(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options,
                 LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = split_line(line, options.delimiter);
  for (auto& h : header) h = trim(h);

  const auto label_it = std::find(header.begin(), header.end(), options.label_column);
  if (label_it == header.end())
    throw DataError(path.string() + ": missing label column '" + options.label_column + "'");
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());

  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line == "\r") continue;
    auto cells = split_line(line, options.delimiter);
    if (cells.size() != header.size())
      throw DataError(path.string() + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(header.size()));
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw DataError(path.string() + ": no data rows");

  std::vector<std::size_t> feature_cols;
  LoadReport local;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_col) continue;
    if (std::find(options.drop_columns.begin(), options.drop_columns.end(), header[c]) !=
        options.drop_columns.end())
      continue;
    if (!parse_number(rows.front()[c])) {
      spdlog::warn("{}: dropping non-numeric column '{}'", path.string(), header[c]);
      local.dropped_columns.push_back(header[c]);
      continue;
    }
    feature_cols.push_back(c);
  }

  MatrixD features(static_cast<Eigen::Index>(rows.size()),
                   static_cast<Eigen::Index>(feature_cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const auto v = parse_number(rows[r][feature_cols[j]]);
      if (!v)
        throw DataError(path.string() + ": unparseable cell '" + rows[r][feature_cols[j]] +
                        "' at data row " + std::to_string(r + 1) + ", column '" +
                        header[feature_cols[j]] + "'");
      features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = *v;
    }
  }

  std::vector<std::string> raw_labels;
  raw_labels.reserve(rows.size());
  bool integral = true;
  for (const auto& row : rows) {
    raw_labels.push_back(trim(row[label_col]));
    const auto v = parse_number(raw_labels.back());
    if (!v || *v < 0 || std::floor(*v) != *v) integral = false;
  }
  std::vector<int> labels(rows.size());
  int num_classes = 0;
  if (integral) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      labels[i] = static_cast<int>(*parse_number(raw_labels[i]));
      num_classes = std::max(num_classes, labels[i] + 1);
    }
    for (int c = 0; c < num_classes; ++c) local.class_names.push_back(std::to_string(c));
  } else {
    std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
    local.class_names.assign(distinct.begin(), distinct.end());
    for (std::size_t i = 0; i < rows.size(); ++i)
      labels[i] = static_cast<int>(
          std::lower_bound(local.class_names.begin(), local.class_names.end(), raw_labels[i]) -
          local.class_names.begin());
    num_classes = static_cast<int>(local.class_names.size());
  }

  std::vector<std::string> names;
  for (std::size_t c : feature_cols) names.push_back(header[c]);
  if (report) *report = std::move(local);
  return Dataset::from(std::move(features), std::move(labels), num_classes, std::move(names));
}

void write_csv(const std::filesystem::path& path, const Dataset& ds,
               const std::vector<std::string>* extra_column, const std::string& extra_name) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (std::size_t j = 0; j < ds.dim(); ++j)
    out << (ds.feature_names.empty() ? "f" + std::to_string(j) : ds.feature_names[j]) << ',';
  out << "label";
  if (ds.soft_labels)
    for (int c = 0; c < ds.num_classes; ++c) out << ",p" << c;
  if (extra_column) out << ',' << extra_name;
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) out << format_cell(ds.features(r, j)) << ',';
    out << ds.labels[i];
    if (ds.soft_labels)
      for (int c = 0; c < ds.num_classes; ++c) out << ',' << format_cell((*ds.soft_labels)(r, c));
    if (extra_column) out << ',' << (*extra_column)[i];
    out << '\n';
  }
}

ZScore ZScore::fit(const Dataset& ds) {
  ZScore z;
  const auto n = static_cast<double>(ds.size());
  z.mean = ds.features.colwise().mean();
  z.stddev.resize(ds.features.cols());
  for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
    const double var = (ds.features.col(j).array() - z.mean(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    z.stddev(j) = sd > 0.0 ? sd : 1.0;
  }
  return z;
}

void ZScore::apply(Dataset& ds) const {
  if (mean.size() != ds.features.cols())
    throw DataError("zscore: fitted on " + std::to_string(mean.size()) + " columns, applied to " +
                    std::to_string(ds.features.cols()));
  ds.features.rowwise() -= mean;
  ds.features.array().rowwise() /= stddev.array();
}

Split split(const Dataset& ds, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw ConfigError("split: train_fraction must be in (0, 1)");
  Rng rng(spec.seed);
  std::vector<std::size_t> train_rows, test_rows;
  if (spec.stratified) {
    for (const auto& [c, n] : ds.class_counts) {
      if (n == 0) continue;
      if (n < 2)
        throw DataError("split: class " + std::to_string(c) + " has " + std::to_string(n) +
                        " sample(s); stratified splitting needs at least 2");
      auto rows = ds.rows_of_class(c);
      std::shuffle(rows.begin(), rows.end(), rng);
      auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
      n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
      train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
      test_rows.insert(test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
    }
  } else {
    const std::size_t n = ds.size();
    if (n < 2) throw DataError("split: need at least 2 rows");
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::shuffle(rows.begin(), rows.end(), rng);
    auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    train_rows.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
    test_rows.assign(rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  Split s;
  s.train = ds.subset(train_rows);
  s.test = ds.subset(test_rows);
  s.train_rows = std::move(train_rows);
  s.test_rows = std::move(test_rows);
  return s;
}

Dataset simulate_imbalance(const Dataset& ds, const ImbalanceMode& mode, int majority_class,
                           std::uint64_t seed) {
  if (mode.kind == ImbalanceMode::Kind::range && mode.low > mode.high)
    throw ConfigError("simulate_imbalance: empty range");
  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (const auto& [c, n] : ds.class_counts) {
    auto rows = ds.rows_of_class(c);
    if (c == majority_class) {
      keep.insert(keep.end(), rows.begin(), rows.end());
      continue;
    }
    std::size_t target = mode.count;
    if (mode.kind == ImbalanceMode::Kind::range) {
      std::uniform_int_distribution<std::size_t> draw(mode.low, mode.high);
      target = draw(rng);
    }
    if (target > n)
      throw DataError("simulate_imbalance: class " + std::to_string(c) + " has " +
                      std::to_string(n) + " rows, " + std::to_string(target) + " requested");
    std::shuffle(rows.begin(), rows.end(), rng);
    keep.insert(keep.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(target));
  }
  std::sort(keep.begin(), keep.end());
  return ds.subset(keep);
}

MatrixD simplex_means(int n_classes, std::size_t dim, double separation) {
  if (n_classes < 1) throw ConfigError("synthetic: need at least one class");
  if (n_classes > 1 && dim + 1 < static_cast<std::size_t>(n_classes))
    throw ConfigError("synthetic: " + std::to_string(n_classes) +
                      " equidistant means need dim >= " + std::to_string(n_classes - 1));
  const auto c = static_cast<Eigen::Index>(n_classes);
  MatrixD means = MatrixD::Zero(c, static_cast<Eigen::Index>(dim));
  if (n_classes == 1 || separation == 0.0) return means;
  // Centered scaled basis vectors have pairwise distance `separation`; take
  // coordinates in the (c - 1)-dimensional span from the Gram eigenbasis.
  const Eigen::MatrixXd centered =
      (separation / std::sqrt(2.0)) *
      (Eigen::MatrixXd::Identity(c, c) - Eigen::MatrixXd::Constant(c, c, 1.0 / static_cast<double>(c)));
  const Eigen::MatrixXd gram = centered * centered.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  // Eigenvalues ascending: the first is the null direction (all-ones).
  for (Eigen::Index k = 1; k < c; ++k) {
    const double lambda = std::max(0.0, eig.eigenvalues()(k));
    means.col(k - 1) = eig.eigenvectors().col(k) * std::sqrt(lambda);
  }
  return means;
}

Dataset make_synthetic(int n_classes, const std::vector<std::size_t>& per_class_counts,
                       std::size_t dim, double separation, std::uint64_t seed) {
  if (per_class_counts.size() != static_cast<std::size_t>(n_classes))
    throw ConfigError("synthetic: need one count per class");
  for (auto n : per_class_counts)
    if (n == 0) throw ConfigError("synthetic: class counts must be >= 1");
  const MatrixD means = simplex_means(n_classes, dim, separation);
  const std::size_t total = std::accumulate(per_class_counts.begin(), per_class_counts.end(), std::size_t{0});
  MatrixD x(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(dim));
  std::vector<int> y;
  y.reserve(total);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Index row = 0;
  for (int c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < per_class_counts[static_cast<std::size_t>(c)]; ++i, ++row) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(row, j) = means(c, j) + normal(rng);
      y.push_back(c);
    }
  }
  return Dataset::from(std::move(x), std::move(y), n_classes);
}

std::string split_checksum(const Split& s) {
  std::uint64_t h = fnv1a(std::as_bytes(std::span(s.train_rows)));
  h = fnv1a("|", h);
  h = fnv1a(std::as_bytes(std::span(s.test_rows)), h);
  return hex_digest(h);
}

Prepared prepare_dataset(const Dataset& ds, const std::string& source,
                         const SplitSpec& split_spec, Normalize normalize) {
  Prepared p;
  p.split = split(ds, split_spec);
  if (normalize == Normalize::zscore) {
    p.normalizer = ZScore::fit(p.split.train);
    p.normalizer->apply(p.split.train);
    p.normalizer->apply(p.split.test);
  }
  auto& m = p.manifest;
  m.source = source;
  m.seed = split_spec.seed;
  m.train_fraction = split_spec.train_fraction;
  m.stratified = split_spec.stratified;
  m.normalize = normalize;
  m.rows = ds.size();
  m.class_counts = ds.class_counts;
  m.train_class_counts = p.split.train.class_counts;
  m.test_class_counts = p.split.test.class_counts;
  m.split_checksum = split_checksum(p.split);
  m.train_checksum = hex_digest(checksum(p.split.train));
  m.test_checksum = hex_digest(checksum(p.split.test));
  return p;
}

Prepared prepare_dataset(const std::filesystem::path& path, const CsvOptions& options,
                         const SplitSpec& split_spec, Normalize normalize) {
  LoadReport report;
  const Dataset ds = load_csv(path, options, &report);
  Prepared p = prepare_dataset(ds, path.string(), split_spec, normalize);
  p.manifest.dropped_columns = report.dropped_columns;
  return p;
}

}  // namespace metabalance::data

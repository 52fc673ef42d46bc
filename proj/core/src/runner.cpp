#include "metabalance/experiment/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "metabalance/errors.hpp"
#include "metabalance/nn/checkpoint.hpp"
#include "metabalance/serialize.hpp"

namespace metabalance::experiment {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json counts_json(const std::map<int, std::size_t>& counts) {
  json j = json::object();
  for (const auto& [c, n] : counts) j[std::to_string(c)] = n;
  return j;
}

json report_json(const eval::MetricsReport& r) { return json::parse(r.to_json()); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::vector<double> positive_scores(const nn::Mlp& model, const data::Dataset& ds) {
  const ad::MatrixD s = model.predict_scores(ds.features);
  return {s.data(), s.data() + s.size()};
}

}  // namespace

fs::path resolve_data_path(const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return p;
  if (const char* dir = std::getenv("METABALANCE_DATA_DIR"); dir && *dir) return fs::path(dir) / p;
  return p;
}

PreparedData prepare_data(const DatasetConfig& config) {
  PreparedData out;
  if (config.source == DataSource::csv) {
    const fs::path path = resolve_data_path(config.path);
    if (!fs::exists(path)) throw DataError("dataset file not found: " + path.string());
    data::Prepared p = data::prepare_dataset(path, config.csv, config.split, config.normalize);
    out.train = std::move(p.split.train);
    out.test = std::move(p.split.test);
    out.manifest = std::move(p.manifest);
    return out;
  }
  const auto& s = config.synthetic;
  out.train = data::make_synthetic(s.classes, s.counts, s.dim, s.separation, derive_seed(s.seed, 1));
  if (s.imbalance) out.train = data::simulate_imbalance(out.train, *s.imbalance, 0, derive_seed(s.seed, 2));
  out.test = data::make_synthetic(s.classes, std::vector<std::size_t>(static_cast<std::size_t>(s.classes), s.test_per_class),
                                  s.dim, s.separation, derive_seed(s.seed, 3));
  if (config.normalize == data::Normalize::zscore) {
    const auto z = data::ZScore::fit(out.train);
    z.apply(out.train);
    z.apply(out.test);
  }
  auto& m = out.manifest;
  m.source = "synthetic:classes=" + std::to_string(s.classes) + ",dim=" + std::to_string(s.dim) +
             ",separation=" + std::to_string(s.separation);
  m.seed = s.seed;
  m.train_fraction = 0.0;
  m.normalize = config.normalize;
  m.rows = out.train.size() + out.test.size();
  m.class_counts = out.train.class_counts;
  for (auto& [c, n] : m.class_counts) n += out.test.count(c);
  m.train_class_counts = out.train.class_counts;
  m.test_class_counts = out.test.class_counts;
  m.train_checksum = hex_digest(data::checksum(out.train));
  m.test_checksum = hex_digest(data::checksum(out.test));
  return out;
}

std::string manifest_json(const data::DatasetManifest& m) {
  json j = {{"source", m.source},
            {"seed", m.seed},
            {"train_fraction", m.train_fraction},
            {"stratified", m.stratified},
            {"normalize", m.normalize == data::Normalize::zscore ? "zscore" : "none"},
            {"rows", m.rows},
            {"class_counts", counts_json(m.class_counts)},
            {"train_class_counts", counts_json(m.train_class_counts)},
            {"test_class_counts", counts_json(m.test_class_counts)},
            {"split_checksum", m.split_checksum},
            {"train_checksum", m.train_checksum},
            {"test_checksum", m.test_checksum},
            {"dropped_columns", m.dropped_columns}};
  return j.dump(2) + "\n";
}

std::vector<fs::path> write_prepared(const PreparedData& data, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<fs::path> out{dir / "train.csv", dir / "test.csv", dir / "manifest.json"};
  data::write_csv(out[0], data.train);
  data::write_csv(out[1], data.test);
  write_text(out[2], manifest_json(data.manifest));
  return out;
}

std::size_t RunManifest::failures() const {
  std::size_t n = 0;
  for (const auto& s : seeds) n += s.ok() ? 0 : 1;
  return n;
}

std::string RunManifest::to_json() const {
  json per_seed = json::array();
  for (const auto& s : seeds) {
    json j = {{"seed", s.seed}, {"ok", s.ok()}, {"wall_seconds", s.wall_seconds}, {"artifacts", s.artifacts}};
    if (s.ok()) {
      j["headline"] = s.headline;
      j["metrics"] = report_json(s.metrics);
      if (s.prior_adjusted) j["prior_adjusted"] = report_json(*s.prior_adjusted);
    } else {
      j["error"] = s.error;
    }
    per_seed.push_back(std::move(j));
  }
  json j = {{"config", json::parse(experiment::to_json(config))},
            {"dataset_checksum", dataset_checksum},
            {"headline_metric", headline_name},
            {"mean", number_or_null(mean)},
            {"std_err", std::isfinite(std_err) ? json(std_err) : json("N/A")},
            {"successful_seeds", seeds.size() - failures()},
            {"failed_seeds", failures()},
            {"seeds", per_seed},
            {"wall_seconds", wall_seconds},
            {"artifacts", artifacts}};
  return j.dump(2) + "\n";
}

train::TrainResult train_seed(const ExperimentConfig& config, const PreparedData& data, std::uint64_t seed) {
  auto model = nn::Mlp::build(config.model, derive_seed(seed, streams::model_init));
  const train::Monitor monitor{&data.train, &data.test};
  if (config.mode == TrainerMode::baseline) {
    train::BaselineConfig b = config.baseline;
    b.seed = seed;
    return train::train_baseline(std::move(model), data.train, b, monitor);
  }
  train::MetaTrainConfig m = config.metabalance;
  m.seed = seed;
  return train::train_metabalance(std::move(model), data.train, m, monitor);
}

SeedOutcome evaluate_seed(const nn::Mlp& model, const PreparedData& data, std::uint64_t seed) {
  SeedOutcome o;
  o.seed = seed;
  const int classes = static_cast<int>(model.spec().num_classes());
  o.metrics = eval::per_class_accuracy(model.predict(data.test.features), data.test.labels, classes);
  if (model.spec().binary()) {
    o.metrics.roc_auc = eval::roc_auc(positive_scores(model, data.test), data.test.labels);
    o.headline = *o.metrics.roc_auc;
  } else {
    std::vector<double> freq(static_cast<std::size_t>(classes));
    for (int c = 0; c < classes; ++c)
      freq[static_cast<std::size_t>(c)] =
          static_cast<double>(data.train.count(c)) / static_cast<double>(data.train.size());
    bool all_present = true;
    for (double f : freq) all_present = all_present && f > 0.0;
    if (all_present) {
      const auto adjusted = eval::prior_adjust(model.predict_scores(data.test.features), freq);
      o.prior_adjusted = eval::per_class_accuracy(adjusted, data.test.labels, classes);
    }
    o.headline = o.metrics.balanced_accuracy;
  }
  return o;
}

RunManifest run_experiment(const ExperimentConfig& config, const PreparedData& data, const fs::path& out_dir) {
  config.validate();
  const auto start = Clock::now();
  fs::create_directories(out_dir);

  RunManifest m;
  m.config = config;
  m.dataset_checksum = data.manifest.train_checksum + ":" + data.manifest.test_checksum;
  m.headline_name = config.model.binary() ? "roc_auc" : "balanced_accuracy";
  m.seeds.resize(config.seeds.size());

  auto run_one = [&](std::size_t i) {
    const std::uint64_t seed = config.seeds[i];
    const auto t0 = Clock::now();
    SeedOutcome o;
    try {
      const train::TrainResult r = train_seed(config, data, seed);
      o = evaluate_seed(r.model, data, seed);
      const fs::path dir = out_dir / ("seed_" + std::to_string(seed));
      fs::create_directories(dir);
      r.log.write_csv(dir / "train_log.csv");
      write_text(dir / "metrics.json", o.metrics.to_json());
      o.metrics.write_csv(dir / "metrics.csv");
      nn::save_checkpoint(dir / "model.ckpt", r.model);
      o.artifacts = {(dir / "train_log.csv").string(), (dir / "metrics.json").string(),
                     (dir / "metrics.csv").string(), (dir / "model.ckpt").string()};
      if (o.prior_adjusted) {
        write_text(dir / "metrics_prior_adjusted.json", o.prior_adjusted->to_json());
        o.artifacts.push_back((dir / "metrics_prior_adjusted.json").string());
      }
      if (config.model.binary()) {
        eval::write_roc_csv(dir / "roc.csv", eval::roc_curve(positive_scores(r.model, data.test), data.test.labels));
        o.artifacts.push_back((dir / "roc.csv").string());
      }
    } catch (const std::exception& e) {
      o = SeedOutcome{};
      o.seed = seed;
      o.error = e.what();
      spdlog::error("seed {} failed: {}", seed, e.what());
    }
    o.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    m.seeds[i] = std::move(o);
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < config.seeds.size(); i = next++) run_one(i);
  };
  const unsigned threads = std::min<unsigned>(config.threads, static_cast<unsigned>(config.seeds.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<double> values;
  for (const auto& s : m.seeds) {
    if (s.ok()) values.push_back(s.headline);
    m.artifacts.insert(m.artifacts.end(), s.artifacts.begin(), s.artifacts.end());
  }
  std::tie(m.mean, m.std_err) = train::mean_and_std_err(values);
  m.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  const fs::path manifest = out_dir / "manifest.json";
  m.artifacts.push_back(manifest.string());
  write_text(manifest, m.to_json());
  return m;
}

train::GridResult run_grid(const ExperimentConfig& config, const PreparedData& data, const fs::path& out_dir) {
  config.validate();
  if (config.grid.inner.empty() || config.grid.outer.empty())
    throw ConfigError("grid: inner and outer kind lists must be non-empty");
  fs::create_directories(out_dir);
  train::GridResult g = train::strategy_grid(data.train, data.test, config.model, config.grid.inner,
                                             config.grid.outer, config.metabalance, config.seeds,
                                             config.threads);
  g.write_csv(out_dir / "grid.csv");

  json cells = json::array();
  for (std::size_t r = 0; r < g.inner.size(); ++r)
    for (std::size_t c = 0; c < g.outer.size(); ++c) {
      const auto& cell = g.cells[r][c];
      cells.push_back({{"inner", resample::to_string(g.inner[r])},
                       {"outer", resample::to_string(g.outer[c])},
                       {"values", cell.values},
                       {"mean", number_or_null(cell.mean)},
                       {"std_err", std::isfinite(cell.std_err) ? json(cell.std_err) : json("N/A")},
                       {"failures", cell.failures}});
    }
  const auto [br, bc] = g.argmax();
  json j = {{"config", json::parse(experiment::to_json(config))},
            {"dataset_checksum", data.manifest.train_checksum + ":" + data.manifest.test_checksum},
            {"metric", config.model.binary() ? "roc_auc" : "balanced_accuracy"},
            {"cells", cells},
            {"best", {{"inner", resample::to_string(g.inner[br])}, {"outer", resample::to_string(g.outer[bc])}}},
            {"artifacts", {(out_dir / "grid.csv").string(), (out_dir / "grid.json").string()}}};
  write_text(out_dir / "grid.json", j.dump(2) + "\n");
  return g;
}

std::vector<fs::path> write_curves(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw DataError("run directory not found: " + run_dir.string());
  const std::regex seed_dir("seed_([0-9]+)");
  std::map<std::uint64_t, train::TrainLog> logs;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    std::smatch match;
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory() || !std::regex_match(name, match, seed_dir)) continue;
    const fs::path log = entry.path() / "train_log.csv";
    if (fs::exists(log)) logs[std::stoull(match[1].str())] = train::TrainLog::read_csv(log);
  }
  if (logs.empty()) throw DataError("no seed_*/train_log.csv found under " + run_dir.string());

  std::set<int> classes;
  std::size_t epochs = 0;
  for (const auto& [seed, log] : logs) {
    epochs = std::max(epochs, log.epochs.size());
    for (const auto& e : log.epochs) {
      for (const auto& [c, a] : e.train_accuracy) classes.insert(c);
      for (const auto& [c, a] : e.test_accuracy) classes.insert(c);
    }
  }
  const fs::path dir = run_dir / "curves";
  fs::create_directories(dir);
  std::vector<fs::path> written;

  const fs::path long_path = dir / "curves_long.csv";
  {
    std::ofstream out(long_path);
    out << "seed,epoch,class,series,accuracy\n";
    for (const auto& [seed, log] : logs)
      for (const auto& e : log.epochs) {
        for (const auto& [c, a] : e.train_accuracy) out << seed << ',' << e.epoch << ',' << c << ",train," << a << '\n';
        for (const auto& [c, a] : e.test_accuracy) out << seed << ',' << e.epoch << ',' << c << ",test," << a << '\n';
      }
  }
  written.push_back(long_path);

  for (int c : classes) {
    const fs::path path = dir / ("class_" + std::to_string(c) + ".csv");
    std::ofstream out(path);
    out << "epoch,train_mean,test_mean";
    for (const auto& [seed, log] : logs) out << ",train_seed_" << seed << ",test_seed_" << seed;
    out << '\n';
    for (std::size_t e = 0; e < epochs; ++e) {
      std::vector<double> tr, te;
      std::string cells;
      for (const auto& [seed, log] : logs) {
        std::string a = "nan", b = "nan";
        if (e < log.epochs.size()) {
          const auto& rec = log.epochs[e];
          if (auto it = rec.train_accuracy.find(c); it != rec.train_accuracy.end()) {
            tr.push_back(it->second);
            a = std::to_string(it->second);
          }
          if (auto it = rec.test_accuracy.find(c); it != rec.test_accuracy.end()) {
            te.push_back(it->second);
            b = std::to_string(it->second);
          }
        }
        cells += "," + a + "," + b;
      }
      const auto mean = [](const std::vector<double>& v) {
        return v.empty() ? std::string("nan") : std::to_string(train::mean_and_std_err(v).first);
      };
      out << e << ',' << mean(tr) << ',' << mean(te) << cells << '\n';
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace metabalance::experiment

#include "metabalance/train/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "metabalance/autodiff/grad.hpp"
#include "metabalance/autodiff/ops.hpp"
#include "metabalance/errors.hpp"
#include "metabalance/eval/metrics.hpp"

namespace metabalance::train {

namespace {

using Clock = std::chrono::steady_clock;

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void accumulate(std::vector<MatrixD>& acc, const std::vector<ad::Tensor>& grads) {
  if (acc.empty()) {
    for (const auto& g : grads) acc.push_back(g.value());
    return;
  }
  for (std::size_t i = 0; i < grads.size(); ++i) acc[i] += grads[i].value();
}

double norm_of(const std::vector<MatrixD>& grads) {
  double s = 0.0;
  for (const auto& g : grads) s += g.squaredNorm();
  return std::sqrt(s);
}

ad::Tensor batch_loss(const nn::Mlp& model, std::span<const ad::Tensor> params, const Batch& b,
                      const nn::LossSpec& loss, Rng* dropout_rng) {
  const ad::Tensor logits = model.forward(params, ad::constant(b.x), nn::Mode::train, dropout_rng);
  return nn::loss(logits, batch_targets(b), loss);
}

/// Eval-mode loss and per-class accuracy on a whole dataset.
void evaluate(const nn::Mlp& model, const Dataset& ds, const nn::LossSpec& loss, double& loss_out,
              std::map<int, double>& accuracy) {
  ad::NoGradGuard no_grad;
  const ad::Tensor logits = model.forward(ad::constant(ds.features), nn::Mode::eval);
  loss_out = nn::loss(logits, nn::Targets::hard(ds.labels), loss).item();
  const auto predictions = model.predict(ds.features);
  accuracy = eval::per_class_accuracy(predictions, ds.labels,
                                      static_cast<int>(model.spec().num_classes()))
                 .per_class_accuracy;
}

class EpochLogger {
 public:
  EpochLogger(const nn::Mlp& model, const nn::LossSpec& loss, const Monitor& monitor, std::uint64_t seed)
      : model_(model), loss_(loss), monitor_(monitor), seed_(seed), start_(Clock::now()) {}

  void record(TrainLog& log, int epoch, double lr, double train_loss, std::uint64_t updates) {
    EpochRecord r;
    r.epoch = epoch;
    r.lr = lr;
    r.train_loss = train_loss;
    r.test_loss = std::numeric_limits<double>::quiet_NaN();
    double ignored = 0.0;
    if (monitor_.train) evaluate(model_, *monitor_.train, loss_, ignored, r.train_accuracy);
    if (monitor_.test) evaluate(model_, *monitor_.test, loss_, r.test_loss, r.test_accuracy);
    r.wall_seconds = std::chrono::duration<double>(Clock::now() - start_).count();
    r.updates = updates;
    r.seed = seed_;
    log.epochs.push_back(std::move(r));
  }

 private:
  const nn::Mlp& model_;
  const nn::LossSpec& loss_;
  const Monitor& monitor_;
  std::uint64_t seed_;
  Clock::time_point start_;
};

void check_model(const nn::Mlp& model, const Dataset& train, const nn::LossSpec& loss) {
  if (train.empty()) throw DataError("training set is empty");
  if (train.dim() != model.spec().input_dim)
    throw ConfigError("model expects " + std::to_string(model.spec().input_dim) +
                      " features but the training set has " + std::to_string(train.dim()));
  if (static_cast<std::size_t>(train.num_classes) > model.spec().num_classes())
    throw ConfigError("training set has " + std::to_string(train.num_classes) +
                      " classes but the model head distinguishes " +
                      std::to_string(model.spec().num_classes()));
  loss.validate(model.spec().num_classes());
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

/// A constant schedule carries no horizon of its own; it spans the run.
optim::ScheduleSpec run_schedule(optim::ScheduleSpec s, int epochs) {
  if (s.kind == optim::ScheduleKind::constant) s.total_epochs = epochs;
  return s;
}

}  // namespace

void BaselineConfig::validate() const {
  sampler.validate();
  optimizer.validate();
  schedule.validate();
  if (epochs < 1) throw ConfigError("baseline: epochs must be >= 1");
  if (schedule.kind != optim::ScheduleKind::constant && schedule.total_epochs != epochs)
    throw ConfigError("baseline: schedule total_epochs must equal epochs");
  if (batch_size < 1) throw ConfigError("baseline: batch_size must be >= 1");
  if (accumulation_steps < 1) throw ConfigError("baseline: accumulation_steps must be >= 1");
}

void MetaTrainConfig::validate() const {
  inner_sampler.validate();
  outer_sampler.validate();
  optimizer.validate();
  schedule.validate();
  if (!(std::isfinite(gamma) && gamma >= 0.0)) throw ConfigError("metabalance: gamma must be finite and >= 0");
  if (!(std::isfinite(beta) && beta >= 0.0)) throw ConfigError("metabalance: beta must be finite and >= 0");
  if (meta_steps < 1) throw ConfigError("metabalance: meta_steps must be >= 1");
  if (support_batch < 1 || query_batch < 1) throw ConfigError("metabalance: batch sizes must be >= 1");
  if (epochs < 1) throw ConfigError("metabalance: epochs must be >= 1");
  if (schedule.kind != optim::ScheduleKind::constant && schedule.total_epochs != epochs)
    throw ConfigError("metabalance: schedule total_epochs must equal epochs");
  if (!(grad_norm_cap > 0.0)) throw ConfigError("metabalance: grad_norm_cap must be > 0");
}

nn::Targets batch_targets(const Batch& b) {
  if (b.soft) return nn::Targets::soft(*b.soft);
  return nn::Targets::hard(b.labels);
}

TrainResult train_baseline(nn::Mlp model, const Dataset& train, const BaselineConfig& config,
                           const Monitor& monitor) {
  config.validate();
  check_model(model, train, config.loss);

  const bool per_batch = config.sampler.kind == resample::SamplerKind::mixup;
  Dataset pool = train;
  if (!per_batch && config.sampler.kind != resample::SamplerKind::natural) {
    SamplerSpec s = config.sampler;
    s.seed = derive_seed(config.seed, streams::resampling);
    pool = resample::apply(train, s).data;
  }
  SamplerSpec stream_spec = resample::make_sampler(resample::SamplerKind::natural);
  if (per_batch) stream_spec = config.sampler;
  resample::BatchStream stream(pool, stream_spec, derive_seed(config.seed, streams::primary_batches));

  optim::Optimizer optimizer(config.optimizer, model.parameter_names());
  Rng dropout_rng(derive_seed(config.seed, streams::dropout));
  EpochLogger logger(model, config.loss, monitor, config.seed);
  TrainResult result{model, {}};
  nn::Mlp& m = result.model;
  auto& params = m.parameters();

  const auto schedule = run_schedule(config.schedule, config.epochs);
  const std::size_t accum = config.accumulation_steps;
  const bool full_batches = accum > 1 || config.steps_per_epoch > 0;
  std::size_t steps = accum == 1 ? ceil_div(pool.size(), config.batch_size)
                                 : ceil_div(pool.size(), config.batch_size * accum);
  if (config.steps_per_epoch > 0) steps = config.steps_per_epoch;
  std::uint64_t updates = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = optim::lr_at(epoch, schedule, config.optimizer.lr);
    double loss_sum = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
      std::vector<MatrixD> grads;
      double step_loss = 0.0;
      for (std::size_t a = 0; a < accum; ++a) {
        const Batch b = full_batches ? stream.next(config.batch_size) : stream.next_in_epoch(config.batch_size);
        const std::string where = "epoch " + std::to_string(epoch) + ", batch " + std::to_string(step);
        ad::Tensor loss;
        try {
          loss = batch_loss(m, params, b, config.loss, &dropout_rng);
        } catch (const TrainingError& e) {
          throw TrainingError("baseline: " + where + ": " + e.what());
        }
        if (!std::isfinite(loss.item())) throw TrainingError("baseline: non-finite loss at " + where);
        accumulate(grads, ad::grad(loss, params));
        step_loss += loss.item();
      }
      optimizer.step(params, grads, lr);
      ++updates;
      loss_sum += step_loss;
    }
    logger.record(result.log, epoch, lr, loss_sum / static_cast<double>(steps), updates);
  }
  return result;
}

MetaGradient meta_gradient(std::span<const ad::Tensor> params, std::span<const LossFn> support,
                           std::span<const LossFn> query, const MetaOptions& options) {
  if (support.size() != query.size() || support.empty())
    throw ConfigError("meta_gradient: need equally many (non-zero) support and query losses");
  MetaGradient out;
  for (std::size_t i = 0; i < support.size(); ++i) {
    const ad::Tensor support_loss = support[i](params);
    const auto inner = ad::grad(support_loss, params, !options.first_order);
    std::vector<ad::Tensor> adapted;
    adapted.reserve(params.size());
    for (std::size_t j = 0; j < params.size(); ++j) {
      const ad::Tensor g = options.first_order ? inner[j].detach() : inner[j];
      adapted.push_back(ad::sub(params[j], ad::scale(g, options.gamma)));
    }
    ad::Tensor total = query[i](adapted);
    if (options.beta != 0.0) total = ad::add(total, ad::scale(support_loss, options.beta));
    if (!std::isfinite(total.item()))
      throw TrainingError("metabalance: non-finite loss at meta step " + std::to_string(i));
    accumulate(out.grads, ad::grad(total, params));
    out.loss += total.item();
  }
  if (options.mean_reduction) {
    const double k = static_cast<double>(support.size());
    for (auto& g : out.grads) g /= k;
    out.loss /= k;
  }
  return out;
}

MetaGradient meta_gradient(const nn::Mlp& model, std::span<const Batch> support,
                           std::span<const Batch> query, const MetaTrainConfig& config,
                           Rng* dropout_rng) {
  if (support.size() != query.size())
    throw ConfigError("meta_gradient: need equally many support and query batches");
  // Losses run in call order (support_i, then query_i), so dropout masks are
  // drawn in the same sequence as an explicit loop would draw them.
  std::vector<LossFn> xs, zs;
  for (std::size_t i = 0; i < support.size(); ++i) {
    xs.push_back([&, i](std::span<const ad::Tensor> p) {
      return batch_loss(model, p, support[i], config.loss, dropout_rng);
    });
    zs.push_back([&, i](std::span<const ad::Tensor> p) {
      return batch_loss(model, p, query[i], config.loss, dropout_rng);
    });
  }
  const MetaOptions options{config.gamma, config.beta, config.first_order, config.mean_reduction};
  return meta_gradient(std::span<const ad::Tensor>(model.parameters()), xs, zs, options);
}

MetaStepResult metabalance_step(nn::Mlp& model, optim::Optimizer& optimizer,
                                resample::BatchStream& support, resample::BatchStream& query,
                                const MetaTrainConfig& config, double lr, Rng* dropout_rng) {
  std::vector<Batch> xs, zs;
  xs.reserve(config.meta_steps);
  zs.reserve(config.meta_steps);
  for (std::size_t i = 0; i < config.meta_steps; ++i) {
    xs.push_back(support.next(config.support_batch));
    zs.push_back(query.next(config.query_batch));
  }
  MetaGradient mg = meta_gradient(model, xs, zs, config, dropout_rng);
  const double norm = norm_of(mg.grads);
  if (!std::isfinite(norm) || norm > config.grad_norm_cap) {
    std::ostringstream msg;
    msg << "metabalance: meta-gradient norm " << norm << " exceeds cap " << config.grad_norm_cap
        << " (loss " << mg.loss << "); per-parameter norms:";
    for (std::size_t i = 0; i < mg.grads.size(); ++i)
      msg << ' ' << model.parameter_names()[i] << '=' << mg.grads[i].norm();
    throw TrainingError(msg.str());
  }
  optimizer.step(model.parameters(), mg.grads, lr);
  return {mg.loss, norm};
}

TrainResult train_metabalance(nn::Mlp model, const Dataset& train, const MetaTrainConfig& config,
                              const Monitor& monitor) {
  config.validate();
  check_model(model, train, config.loss);

  resample::BatchStream support(train, config.inner_sampler,
                                derive_seed(config.seed, streams::support_batches),
                                config.materialize_balanced);
  resample::BatchStream query(train, config.outer_sampler,
                              derive_seed(config.seed, streams::primary_batches),
                              config.materialize_balanced);
  optim::Optimizer optimizer(config.optimizer, model.parameter_names());
  Rng dropout_rng(derive_seed(config.seed, streams::dropout));
  EpochLogger logger(model, config.loss, monitor, config.seed);
  TrainResult result{model, {}};

  const std::size_t steps = config.outer_steps_per_epoch > 0
                                ? config.outer_steps_per_epoch
                                : ceil_div(train.size(), config.meta_steps * config.support_batch);
  const auto schedule = run_schedule(config.schedule, config.epochs);
  const double pairs = config.mean_reduction ? 1.0 : static_cast<double>(config.meta_steps);
  std::uint64_t updates = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = optim::lr_at(epoch, schedule, config.optimizer.lr);
    double loss_sum = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
      try {
        loss_sum += metabalance_step(result.model, optimizer, support, query, config, lr, &dropout_rng).loss / pairs;
      } catch (const TrainingError& e) {
        throw TrainingError("epoch " + std::to_string(epoch) + ", outer step " + std::to_string(step) +
                            ": " + e.what());
      }
      ++updates;
    }
    logger.record(result.log, epoch, lr, loss_sum / static_cast<double>(steps), updates);
  }
  return result;
}

double headline_metric(const nn::Mlp& model, const Dataset& test) {
  if (model.spec().binary()) {
    const MatrixD scores = model.predict_scores(test.features);
    std::vector<double> s(scores.data(), scores.data() + scores.size());
    return eval::roc_auc(s, test.labels);
  }
  const auto predictions = model.predict(test.features);
  return eval::per_class_accuracy(predictions, test.labels, static_cast<int>(model.spec().num_classes()))
      .balanced_accuracy;
}

// ---------------------------------------------------------------------------
// Train log CSV

void TrainLog::write_csv(const std::filesystem::path& path) const {
  std::set<int> train_classes, test_classes;
  for (const auto& e : epochs) {
    for (const auto& [c, a] : e.train_accuracy) train_classes.insert(c);
    for (const auto& [c, a] : e.test_accuracy) test_classes.insert(c);
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,lr,train_loss,test_loss,wall_seconds,updates,seed";
  for (int c : train_classes) out << ",train_acc_" << c;
  for (int c : test_classes) out << ",test_acc_" << c;
  out << '\n';
  for (const auto& e : epochs) {
    out << e.epoch << ',' << number(e.lr) << ',' << number(e.train_loss) << ',' << number(e.test_loss)
        << ',' << number(e.wall_seconds) << ',' << e.updates << ',' << e.seed;
    for (int c : train_classes) {
      auto it = e.train_accuracy.find(c);
      out << ',' << (it == e.train_accuracy.end() ? std::string("nan") : number(it->second));
    }
    for (int c : test_classes) {
      auto it = e.test_accuracy.find(c);
      out << ',' << (it == e.test_accuracy.end() ? std::string("nan") : number(it->second));
    }
    out << '\n';
  }
}

TrainLog TrainLog::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty train log");
  const auto header = split(line);
  TrainLog log;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw DataError(path.string() + ": row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " cells, header has " + std::to_string(header.size()));
    EpochRecord e;
    for (std::size_t i = 0; i < header.size(); ++i) {
      const std::string& h = header[i];
      const double v = std::stod(cells[i]);
      if (h == "epoch") e.epoch = static_cast<int>(v);
      else if (h == "lr") e.lr = v;
      else if (h == "train_loss") e.train_loss = v;
      else if (h == "test_loss") e.test_loss = v;
      else if (h == "wall_seconds") e.wall_seconds = v;
      else if (h == "updates") e.updates = std::stoull(cells[i]);
      else if (h == "seed") e.seed = std::stoull(cells[i]);
      else if (h.rfind("train_acc_", 0) == 0) {
        if (!std::isnan(v)) e.train_accuracy[std::stoi(h.substr(10))] = v;
      } else if (h.rfind("test_acc_", 0) == 0) {
        if (!std::isnan(v)) e.test_accuracy[std::stoi(h.substr(9))] = v;
      }
    }
    log.epochs.push_back(std::move(e));
  }
  return log;
}

// ---------------------------------------------------------------------------
// Strategy grid

std::pair<double, double> mean_and_std_err(std::span<const double> values) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (values.empty()) return {nan, nan};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, nan};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double k = static_cast<double>(values.size());
  return {mean, std::sqrt(ss / (k - 1.0)) / std::sqrt(k)};
}

void GridResult::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "inner\\outer";
  for (auto k : outer) out << ',' << resample::to_string(k);
  for (auto k : outer) out << ',' << resample::to_string(k) << "_std_err";
  out << '\n';
  for (std::size_t r = 0; r < inner.size(); ++r) {
    out << resample::to_string(inner[r]);
    for (const auto& c : cells[r]) out << ',' << (c.values.empty() ? "nan" : number(c.mean));
    for (const auto& c : cells[r]) out << ',' << (std::isnan(c.std_err) ? "nan" : number(c.std_err));
    out << '\n';
  }
}

std::pair<std::size_t, std::size_t> GridResult::argmax() const {
  std::pair<std::size_t, std::size_t> best{0, 0};
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < cells.size(); ++r)
    for (std::size_t c = 0; c < cells[r].size(); ++c)
      if (!cells[r][c].values.empty() && cells[r][c].mean > best_value) {
        best_value = cells[r][c].mean;
        best = {r, c};
      }
  return best;
}

GridResult strategy_grid(const Dataset& train, const Dataset& test, const nn::MlpSpec& model,
                         const std::vector<resample::SamplerKind>& inner,
                         const std::vector<resample::SamplerKind>& outer,
                         const MetaTrainConfig& config_template,
                         const std::vector<std::uint64_t>& seeds, unsigned threads) {
  if (inner.empty() || outer.empty() || seeds.empty())
    throw ConfigError("strategy_grid: inner kinds, outer kinds and seeds must be non-empty");
  model.validate();
  config_template.validate();

  struct Job {
    std::size_t row, col, seed_index;
    double value = 0.0;
    std::string error;
  };
  std::vector<Job> jobs;
  for (std::size_t r = 0; r < inner.size(); ++r)
    for (std::size_t c = 0; c < outer.size(); ++c)
      for (std::size_t s = 0; s < seeds.size(); ++s) jobs.push_back({r, c, s, 0.0, {}});

  auto run = [&](Job& job) {
    try {
      MetaTrainConfig cfg = config_template;
      cfg.inner_sampler.kind = inner[job.row];
      cfg.outer_sampler.kind = outer[job.col];
      cfg.seed = seeds[job.seed_index];
      auto net = nn::Mlp::build(model, derive_seed(cfg.seed, streams::model_init));
      const TrainResult trained = train_metabalance(std::move(net), train, cfg);
      job.value = headline_metric(trained.model, test);
    } catch (const std::exception& e) {
      job.error = "seed " + std::to_string(seeds[job.seed_index]) + ": " + e.what();
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) run(jobs[i]);
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  GridResult g;
  g.inner = inner;
  g.outer = outer;
  g.cells.assign(inner.size(), std::vector<GridCell>(outer.size()));
  for (const auto& job : jobs) {
    auto& cell = g.cells[job.row][job.col];
    if (job.error.empty())
      cell.values.push_back(job.value);
    else
      cell.failures.push_back(job.error);
  }
  for (auto& row : g.cells)
    for (auto& cell : row) std::tie(cell.mean, cell.std_err) = mean_and_std_err(cell.values);
  return g;
}

}  // namespace metabalance::train

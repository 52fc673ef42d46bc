#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "metabalance/data/dataset.hpp"
#include "metabalance/nn/loss.hpp"
#include "metabalance/nn/mlp.hpp"
#include "metabalance/optim/optimizer.hpp"
#include "metabalance/optim/schedule.hpp"
#include "metabalance/resample/sampler.hpp"
#include "metabalance/resample/stream.hpp"

namespace metabalance::train {

using data::Dataset;
using ad::MatrixD;
using resample::Batch;
using resample::SamplerSpec;

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean optimization loss over the epoch's updates
  double test_loss = 0.0;   // NaN when no test set is monitored
  std::map<int, double> train_accuracy;
  std::map<int, double> test_accuracy;
  double wall_seconds = 0.0;  // cumulative
  std::uint64_t updates = 0;  // cumulative optimizer steps
  std::uint64_t seed = 0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;

  /// One row per epoch; per-class columns train_acc_<c>, test_acc_<c>.
  void write_csv(const std::filesystem::path& path) const;
  static TrainLog read_csv(const std::filesystem::path& path);
};

/// Datasets evaluated (eval mode) after every epoch for the log. Neither
/// influences training.
struct Monitor {
  const Dataset* train = nullptr;
  const Dataset* test = nullptr;
};

struct BaselineConfig {
  SamplerSpec sampler;
  optim::OptimizerSpec optimizer = optim::adam();
  optim::ScheduleSpec schedule;
  nn::LossSpec loss;
  int epochs = 1;
  std::size_t batch_size = 24;
  /// Mini-batch losses summed per optimizer step. With 1, an epoch is
  /// ceil(n / batch_size) steps ending in a partial batch; with more, every
  /// batch is full and an epoch is ceil(n / (batch_size * steps)) updates.
  std::size_t accumulation_steps = 1;
  /// Optimizer steps per epoch; 0 selects the epoch lengths above, otherwise
  /// every batch is full and the stream wraps across data epochs.
  std::size_t steps_per_epoch = 0;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const BaselineConfig&) const = default;
};

struct MetaTrainConfig {
  SamplerSpec inner_sampler;  // support batches X
  SamplerSpec outer_sampler;  // query batches Z
  double gamma = 0.01;        // inner step size
  optim::OptimizerSpec optimizer = optim::sgd_nesterov(0.1, 0.9, 5e-4);  // outer update, rate eta
  optim::ScheduleSpec schedule;
  nn::LossSpec loss;
  double beta = 0.0;
  std::size_t meta_steps = 80;
  std::size_t support_batch = 24;
  std::size_t query_batch = 16;
  int epochs = 1;
  /// Outer updates per logged epoch; 0 selects ceil(n / (meta_steps * support_batch)).
  std::size_t outer_steps_per_epoch = 0;
  bool first_order = false;
  /// Average LossZ over meta steps instead of summing.
  bool mean_reduction = false;
  double grad_norm_cap = 1e4;
  /// Balanced kinds materialize a resampled pool instead of drawing balanced batches.
  bool materialize_balanced = false;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const MetaTrainConfig&) const = default;
};

struct TrainResult {
  nn::Mlp model;
  TrainLog log;
};

/// Targets for a batch: soft labels when present, class indices otherwise.
nn::Targets batch_targets(const Batch& b);

/**
 * Applies the sampler once to the whole training set, then runs mini-batch
 * epochs. Throws TrainingError on a non-finite loss, naming epoch and batch.
 */
TrainResult train_baseline(nn::Mlp model, const Dataset& train, const BaselineConfig& config,
                           const Monitor& monitor = {});

struct MetaGradient {
  std::vector<MatrixD> grads;
  double loss = 0.0;  // value of the accumulated LossZ
};

/// A scalar loss as a function of a parameter list.
using LossFn = std::function<ad::Tensor(std::span<const ad::Tensor> params)>;

struct MetaOptions {
  double gamma = 0.01;
  double beta = 0.0;
  bool first_order = false;
  bool mean_reduction = false;
};

/**
 * Gradient of LossZ = sum_i [ query_i(theta_i') + beta support_i(theta) ],
 * theta_i' = theta - gamma grad support_i(theta), with respect to `params`.
 * Every theta_i' starts from the same theta. The inner gradient stays on the
 * tape (second order) unless first_order is set.
 */
MetaGradient meta_gradient(std::span<const ad::Tensor> params, std::span<const LossFn> support,
                           std::span<const LossFn> query, const MetaOptions& options);

/**
 * Gradient with respect to the model parameters theta of
 *   LossZ = sum_i [ L(f(theta_i'), Z_i) + beta L(f(theta), X_i) ],
 *   theta_i' = theta - gamma grad_theta L(f(theta), X_i),
 * differentiating through theta_i' (second order) unless first_order is set.
 * Divided by the number of pairs when mean_reduction is set.
 */
MetaGradient meta_gradient(const nn::Mlp& model, std::span<const Batch> support,
                           std::span<const Batch> query, const MetaTrainConfig& config,
                           Rng* dropout_rng = nullptr);

struct MetaStepResult {
  double loss = 0.0;
  double grad_norm = 0.0;
};

/// One outer update: meta_steps (support, query) pairs from the same theta,
/// then one optimizer step. Throws TrainingError when the gradient norm is
/// not finite or exceeds grad_norm_cap.
MetaStepResult metabalance_step(nn::Mlp& model, optim::Optimizer& optimizer,
                                resample::BatchStream& support, resample::BatchStream& query,
                                const MetaTrainConfig& config, double lr, Rng* dropout_rng);

TrainResult train_metabalance(nn::Mlp model, const Dataset& train, const MetaTrainConfig& config,
                              const Monitor& monitor = {});

/// Test-set score used to compare strategies: ROC-AUC for binary models,
/// balanced accuracy otherwise.
double headline_metric(const nn::Mlp& model, const Dataset& test);

struct GridCell {
  std::vector<double> values;  // one per successful seed
  std::vector<std::string> failures;
  double mean = 0.0;
  double std_err = 0.0;  // NaN with fewer than two values
};

struct GridResult {
  std::vector<resample::SamplerKind> inner;  // rows
  std::vector<resample::SamplerKind> outer;  // columns
  std::vector<std::vector<GridCell>> cells;

  /// Matrix of "mean" (and "std_err") values, rows = inner kinds.
  void write_csv(const std::filesystem::path& path) const;
  /// (row, column) of the best mean among cells with at least one value.
  std::pair<std::size_t, std::size_t> argmax() const;
};

/// Mean and standard error (sample std / sqrt(k)); std_err NaN for k < 2.
std::pair<double, double> mean_and_std_err(std::span<const double> values);

/**
 * Trains one MetaBalance model per (inner kind, outer kind, seed) from
 * `config_template` and scores it with headline_metric. A failing cell seed
 * is recorded and the grid continues. `threads` > 1 runs cells concurrently.
 */
GridResult strategy_grid(const Dataset& train, const Dataset& test, const nn::MlpSpec& model,
                         const std::vector<resample::SamplerKind>& inner,
                         const std::vector<resample::SamplerKind>& outer,
                         const MetaTrainConfig& config_template,
                         const std::vector<std::uint64_t>& seeds, unsigned threads = 1);

}  // namespace metabalance::train

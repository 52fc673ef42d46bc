#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "metabalance/resample/sampler.hpp"

namespace metabalance::resample {

struct Batch {
  MatrixD x;
  std::vector<int> labels;
  std::optional<MatrixD> soft;  // set for mixup batches and soft-labelled sources

  std::size_t size() const { return labels.size(); }
};

/**
 * Deterministic, endless sequence of mini-batches drawn from `source`.
 *
 * - natural: rows shuffled once per epoch, without replacement; the next
 *   epoch starts when the current one is exhausted.
 * - random_under / random_over: each row picks a class uniformly, then a row
 *   of that class uniformly (with replacement). With `materialize` set they
 *   instead materialize the resampled dataset each epoch like the kinds below.
 * - every other kind: the resampled dataset is materialized at the start of
 *   each epoch (once for deterministic kinds) and drawn from like natural.
 * - mixup: natural batches mixed with a shuffled copy of themselves.
 */
class BatchStream {
 public:
  BatchStream(Dataset source, SamplerSpec spec, std::uint64_t seed, bool materialize = false);

  /// Exactly batch_size rows; crosses epoch boundaries when needed.
  Batch next(std::size_t batch_size);
  /// At most batch_size rows, never crossing an epoch boundary. Starts a new
  /// epoch when the current one is exhausted. Balanced draws have no epochs
  /// and always return full batches.
  Batch next_in_epoch(std::size_t batch_size);

  /// Rows left before the current epoch ends.
  std::size_t remaining_in_epoch() const { return order_.size() - position_; }
  /// Rows in one epoch of the current pool.
  std::size_t epoch_rows() const { return order_.size(); }
  std::size_t epoch() const { return epoch_; }
  const Dataset& pool() const { return pool_; }
  const SamplerSpec& spec() const { return spec_; }
  bool balanced_draw() const { return balanced_; }

 private:
  void start_epoch();
  Batch gather(const std::vector<std::size_t>& rows);
  Batch finish(Batch b);

  Dataset source_;
  SamplerSpec spec_;
  std::uint64_t seed_;
  bool balanced_;
  Rng rng_;
  Dataset pool_;
  bool pool_ready_ = false;
  std::vector<std::size_t> order_;
  std::size_t position_ = 0;
  std::size_t epoch_ = 0;
  std::vector<std::vector<std::size_t>> by_class_;
};

}  // namespace metabalance::resample

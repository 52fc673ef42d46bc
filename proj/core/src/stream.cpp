#include "metabalance/resample/stream.hpp"

#include <algorithm>
#include <numeric>

#include "metabalance/errors.hpp"

namespace metabalance::resample {

namespace {

Batch concat(std::vector<Batch>& parts) {
  if (parts.size() == 1) return std::move(parts.front());
  Eigen::Index n = 0;
  for (const auto& p : parts) n += p.x.rows();
  Batch out;
  out.x.resize(n, parts.front().x.cols());
  if (parts.front().soft) out.soft = MatrixD(n, parts.front().soft->cols());
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.x.middleRows(at, p.x.rows()) = p.x;
    if (out.soft) out.soft->middleRows(at, p.x.rows()) = *p.soft;
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    at += p.x.rows();
  }
  return out;
}

}  // namespace

BatchStream::BatchStream(Dataset source, SamplerSpec spec, std::uint64_t seed, bool materialize)
    : source_(std::move(source)),
      spec_(spec),
      seed_(seed),
      balanced_(is_balancing_draw(spec.kind) && !materialize),
      rng_(seed) {
  spec_.validate();
  if (source_.empty()) throw DataError("batch stream: empty dataset");
  if (balanced_) {
    for (int c = 0; c < source_.num_classes; ++c) {
      by_class_.push_back(source_.rows_of_class(c));
      if (by_class_.back().empty())
        throw DataError("batch stream: class " + std::to_string(c) +
                        " is empty; balanced sampling needs every class");
    }
    pool_ = source_;
    return;
  }
  start_epoch();
}

void BatchStream::start_epoch() {
  const bool natural_pool = spec_.kind == SamplerKind::natural || spec_.kind == SamplerKind::mixup;
  if (natural_pool) {
    if (!pool_ready_) pool_ = source_;
  } else if (!pool_ready_ || is_stochastic(spec_.kind)) {
    SamplerSpec s = spec_;
    s.seed = derive_seed(derive_seed(seed_, streams::resampling), epoch_);
    pool_ = apply(source_, s).data;
  }
  pool_ready_ = true;
  if (pool_.empty()) throw DataError("batch stream: resampled pool is empty");
  order_.resize(pool_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::shuffle(order_.begin(), order_.end(), rng_);
  position_ = 0;
}

Batch BatchStream::gather(const std::vector<std::size_t>& rows) {
  Batch b;
  b.x.resize(static_cast<Eigen::Index>(rows.size()), pool_.features.cols());
  b.labels.reserve(rows.size());
  if (pool_.soft_labels) b.soft = MatrixD(static_cast<Eigen::Index>(rows.size()), pool_.num_classes);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    b.x.row(static_cast<Eigen::Index>(i)) = pool_.features.row(r);
    b.labels.push_back(pool_.labels[rows[i]]);
    if (b.soft) b.soft->row(static_cast<Eigen::Index>(i)) = pool_.soft_labels->row(r);
  }
  return b;
}

Batch BatchStream::finish(Batch b) {
  if (spec_.kind != SamplerKind::mixup) return b;
  MatrixD y = b.soft ? *b.soft : MatrixD::Zero(b.x.rows(), pool_.num_classes);
  if (!b.soft)
    for (std::size_t i = 0; i < b.labels.size(); ++i) y(static_cast<Eigen::Index>(i), b.labels[i]) = 1.0;
  MixupBatch m = mixup_batch(b.x, y, spec_.mixup_alpha, rng_);
  b.x = std::move(m.x);
  b.soft = std::move(m.y);
  return b;
}

Batch BatchStream::next(std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch stream: batch size must be >= 1");
  std::vector<std::size_t> rows;
  rows.reserve(batch_size);
  if (balanced_) {
    std::uniform_int_distribution<std::size_t> pick_class(0, by_class_.size() - 1);
    for (std::size_t i = 0; i < batch_size; ++i) {
      const auto& members = by_class_[pick_class(rng_)];
      std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
      rows.push_back(members[pick(rng_)]);
    }
    return finish(gather(rows));
  }
  // Rows index the pool of the epoch they were drawn in, so a batch that
  // straddles an epoch boundary is gathered per epoch and concatenated.
  std::vector<Batch> parts;
  while (rows.size() < batch_size) {
    if (position_ == order_.size()) {
      if (!rows.empty()) parts.push_back(gather(rows));
      batch_size -= rows.size();
      rows.clear();
      ++epoch_;
      start_epoch();
    }
    rows.push_back(order_[position_++]);
  }
  parts.push_back(gather(rows));
  return finish(concat(parts));
}

Batch BatchStream::next_in_epoch(std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch stream: batch size must be >= 1");
  if (balanced_) return next(batch_size);
  if (position_ == order_.size()) {
    ++epoch_;
    start_epoch();
  }
  const std::size_t take = std::min(batch_size, order_.size() - position_);
  std::vector<std::size_t> rows(order_.begin() + static_cast<std::ptrdiff_t>(position_),
                                order_.begin() + static_cast<std::ptrdiff_t>(position_ + take));
  position_ += take;
  return finish(gather(rows));
}

}  // namespace metabalance::resample

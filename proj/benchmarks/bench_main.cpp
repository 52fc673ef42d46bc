#include <random>

#include <benchmark/benchmark.h>

#include "metabalance/autodiff/grad.hpp"
#include "metabalance/eval/metrics.hpp"
#include "metabalance/nn/loss.hpp"
#include "metabalance/resample/neighbors.hpp"
#include "metabalance/resample/sampler.hpp"
#include "metabalance/resample/stream.hpp"
#include "metabalance/train/trainer.hpp"

using namespace metabalance;
using ad::MatrixD;

namespace {

MatrixD gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n;
  MatrixD m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

data::Dataset imbalanced(std::size_t majority, std::size_t minority, std::size_t dim, std::uint64_t seed) {
  MatrixD x = gaussian(static_cast<Eigen::Index>(majority + minority), static_cast<Eigen::Index>(dim), seed);
  std::vector<int> y(majority + minority, 0);
  for (std::size_t i = majority; i < y.size(); ++i) {
    y[i] = 1;
    x.row(static_cast<Eigen::Index>(i)).array() += 1.5;
  }
  return data::Dataset::from(std::move(x), std::move(y), 2);
}

void BM_ForwardBackward(benchmark::State& state) {
  auto spec = nn::fraud_mlp_spec();
  auto model = nn::Mlp::build(spec, 1);
  const auto batch = static_cast<Eigen::Index>(state.range(0));
  const MatrixD x = gaussian(batch, 29, 2);
  std::vector<int> y(static_cast<std::size_t>(batch), 0);
  y[0] = 1;
  Rng rng(3);
  for (auto _ : state) {
    auto loss = nn::loss(model.forward(ad::constant(x), nn::Mode::train, &rng), nn::Targets::hard(y), {});
    auto g = ad::grad(loss, std::span<const ad::Tensor>(model.parameters()));
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(24)->Arg(256);

void BM_MetaGradient(benchmark::State& state) {
  auto model = nn::Mlp::build(nn::fraud_mlp_spec(), 1);
  const auto train = imbalanced(2000, 40, 29, 4);
  resample::BatchStream support(train, resample::make_sampler(resample::SamplerKind::natural), 5);
  resample::BatchStream query(train, resample::make_sampler(resample::SamplerKind::random_under), 6);
  std::vector<resample::Batch> xs, zs;
  for (int i = 0; i < state.range(0); ++i) {
    xs.push_back(support.next(24));
    zs.push_back(query.next(16));
  }
  train::MetaTrainConfig cfg;
  cfg.first_order = state.range(1) != 0;
  Rng rng(7);
  for (auto _ : state) benchmark::DoNotOptimize(train::meta_gradient(model, xs, zs, cfg, &rng));
  state.SetLabel(cfg.first_order ? "first order" : "second order");
}
BENCHMARK(BM_MetaGradient)->Args({8, 0})->Args({8, 1})->Args({80, 0})->Unit(benchmark::kMillisecond);

void BM_KNearest(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const MatrixD x = gaussian(static_cast<Eigen::Index>(n), 29, 8);
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(resample::k_nearest(x, q, all, 5));
    q = (q + 1) % n;
  }
}
BENCHMARK(BM_KNearest)->Arg(1000)->Arg(10000);

void BM_Sampler(benchmark::State& state) {
  const auto train = imbalanced(3000, 150, 29, 9);
  const auto kind = static_cast<resample::SamplerKind>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(resample::apply(train, resample::make_sampler(kind, 10)));
  state.SetLabel(resample::to_string(kind));
}
BENCHMARK(BM_Sampler)
    ->Arg(static_cast<int>(resample::SamplerKind::smote))
    ->Arg(static_cast<int>(resample::SamplerKind::enn))
    ->Arg(static_cast<int>(resample::SamplerKind::svm_smote))
    ->Unit(benchmark::kMillisecond);

void BM_RocAuc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(11);
  std::uniform_real_distribution<double> u;
  std::vector<double> s(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = u(rng) < 0.01 ? 1 : 0;
    s[i] = u(rng) + 0.3 * y[i];
  }
  y[0] = 1;
  y[1] = 0;
  for (auto _ : state) benchmark::DoNotOptimize(eval::roc_auc(s, y));
}
BENCHMARK(BM_RocAuc)->Arg(1000)->Arg(57000);

}  // namespace

BENCHMARK_MAIN();

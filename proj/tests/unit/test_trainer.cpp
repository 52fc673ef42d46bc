#include <cmath>
#include <limits>

#include "doctest.h"
#include "helpers.hpp"
#include "metabalance/autodiff/grad.hpp"
#include "metabalance/autodiff/ops.hpp"
#include "metabalance/train/trainer.hpp"

using namespace metabalance;
using namespace metabalance::train;
using ad::Tensor;
using resample::SamplerKind;
using testing::random_matrix;

namespace {

Tensor half_sq_dist(std::span<const Tensor> params, const std::vector<MatrixD>& centre) {
  Tensor total = Tensor::scalar(0.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor d = ad::sub(params[i], ad::constant(centre[i]));
    total = ad::add(total, ad::scale(ad::sum(ad::mul(d, d)), 0.5));
  }
  return total;
}

nn::MlpSpec tiny_spec(std::size_t dim = 3) {
  nn::MlpSpec s;
  s.input_dim = dim;
  s.hidden_widths = {5, 4};
  s.output_dim = 1;
  return s;
}

Batch random_batch(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Batch b;
  b.x = random_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim), seed);
  Rng rng(seed + 1);
  for (std::size_t i = 0; i < n; ++i) b.labels.push_back(static_cast<int>(rng() % 2));
  b.labels[0] = 0;
  b.labels[1] = 1;
  return b;
}

double plain_loss(const nn::Mlp& m, std::span<const Tensor> params, const Batch& b) {
  return nn::loss(m.forward(params, ad::constant(b.x), nn::Mode::eval), batch_targets(b), {}).item();
}

// Unrolled objective sum_i [ L(theta_i', Z_i) + beta L(theta, X_i) ] evaluated by value.
double unrolled_objective(const nn::Mlp& m, const std::vector<MatrixD>& theta, const std::vector<Batch>& support,
                          const std::vector<Batch>& query, double gamma, double beta) {
  std::vector<Tensor> p;
  for (const auto& v : theta) p.push_back(Tensor::parameter(v));
  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    Tensor lx = nn::loss(m.forward(p, ad::constant(support[i].x), nn::Mode::eval), batch_targets(support[i]), {});
    auto g = ad::grad(lx, std::span<const Tensor>(p));
    std::vector<Tensor> adapted;
    for (std::size_t j = 0; j < p.size(); ++j) adapted.push_back(ad::constant(MatrixD(theta[j] - gamma * g[j].value())));
    total += plain_loss(m, adapted, query[i]) + beta * lx.item();
  }
  return total;
}

Dataset two_blobs(std::size_t majority, std::size_t minority, std::uint64_t seed) {
  return testing::blobs({majority, minority}, 3, 2.0, seed);
}

}  // namespace

TEST_CASE("meta-gradient on quadratics matches the closed form") {
  const std::vector<MatrixD> theta{random_matrix(3, 2, 1), random_matrix(1, 2, 2)};
  std::vector<Tensor> params;
  for (const auto& v : theta) params.push_back(Tensor::parameter(v));

  for (double gamma : {0.0, 0.1, 0.7}) {
    for (double beta : {0.0, 0.5}) {
      const std::size_t k = 3;
      std::vector<std::vector<MatrixD>> a(k), b(k);
      std::vector<LossFn> support, query;
      for (std::size_t i = 0; i < k; ++i) {
        a[i] = {random_matrix(3, 2, 10 + i), random_matrix(1, 2, 20 + i)};
        b[i] = {random_matrix(3, 2, 30 + i), random_matrix(1, 2, 40 + i)};
        support.push_back([centre = a[i]](std::span<const Tensor> p) { return half_sq_dist(p, centre); });
        query.push_back([centre = b[i]](std::span<const Tensor> p) { return half_sq_dist(p, centre); });
      }
      auto mg = meta_gradient(params, support, query, {gamma, beta, false, false});

      double worst = 0.0;
      for (std::size_t j = 0; j < theta.size(); ++j) {
        MatrixD expected = MatrixD::Zero(theta[j].rows(), theta[j].cols());
        for (std::size_t i = 0; i < k; ++i) {
          const MatrixD adapted = theta[j] - gamma * (theta[j] - a[i][j]);
          expected += (1.0 - gamma) * (adapted - b[i][j]) + beta * (theta[j] - a[i][j]);
        }
        worst = std::max(worst, (mg.grads[j] - expected).cwiseAbs().maxCoeff());
      }
      CHECK(worst < 1e-10);
    }
  }
}

TEST_CASE("quadratic meta-gradient: first order drops the (1 - gamma) factor, mean divides by k") {
  const std::vector<MatrixD> theta{random_matrix(2, 2, 3)};
  const std::vector<MatrixD> a{random_matrix(2, 2, 4)}, b{random_matrix(2, 2, 5)};
  std::vector<Tensor> params{Tensor::parameter(theta[0])};
  std::vector<LossFn> support{[&](std::span<const Tensor> p) { return half_sq_dist(p, a); }};
  std::vector<LossFn> query{[&](std::span<const Tensor> p) { return half_sq_dist(p, b); }};
  std::vector<LossFn> support2{support[0], support[0]}, query2{query[0], query[0]};
  const double gamma = 0.3;
  const MatrixD adapted = theta[0] - gamma * (theta[0] - a[0]);

  auto first = meta_gradient(params, support, query, {gamma, 0.0, true, false});
  CHECK((first.grads[0] - (adapted - b[0])).cwiseAbs().maxCoeff() < 1e-12);

  auto summed = meta_gradient(params, support2, query2, {gamma, 0.0, false, false});
  auto averaged = meta_gradient(params, support2, query2, {gamma, 0.0, false, true});
  CHECK((summed.grads[0] - 2.0 * averaged.grads[0]).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(summed.loss == doctest::Approx(2.0 * averaged.loss).epsilon(1e-12));
}

TEST_CASE("second-order meta-gradient matches finite differences of the unrolled objective") {
  auto model = nn::Mlp::build(tiny_spec(), 7);
  std::vector<Batch> support, query;
  for (std::uint64_t i = 0; i < 2; ++i) {
    support.push_back(random_batch(6, 3, 100 + i));
    query.push_back(random_batch(5, 3, 200 + i));
  }
  for (double beta : {0.0, 0.4}) {
    MetaTrainConfig cfg;
    cfg.gamma = 0.5;
    cfg.beta = beta;
    auto mg = meta_gradient(model, support, query, cfg);

    const auto theta = model.parameter_values();
    const double h = 1e-6;
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j)
      for (Eigen::Index e = 0; e < theta[j].size(); ++e) {
        auto plus = theta, minus = theta;
        plus[j].data()[e] += h;
        minus[j].data()[e] -= h;
        const double fd = (unrolled_objective(model, plus, support, query, cfg.gamma, beta) -
                           unrolled_objective(model, minus, support, query, cfg.gamma, beta)) /
                          (2 * h);
        num += (mg.grads[j].data()[e] - fd) * (mg.grads[j].data()[e] - fd);
        den += fd * fd;
      }
    CHECK(std::sqrt(num / den) < 1e-4);
    CHECK(mg.loss == doctest::Approx(unrolled_objective(model, theta, support, query, cfg.gamma, beta)).epsilon(1e-12));
  }
}

TEST_CASE("first-order and second-order meta-gradients differ and are each deterministic") {
  auto model = nn::Mlp::build(tiny_spec(), 8);
  std::vector<Batch> support{random_batch(6, 3, 1)}, query{random_batch(6, 3, 2)};
  MetaTrainConfig second;
  second.gamma = 0.5;
  MetaTrainConfig first = second;
  first.first_order = true;
  auto s1 = meta_gradient(model, support, query, second), s2 = meta_gradient(model, support, query, second);
  auto f1 = meta_gradient(model, support, query, first), f2 = meta_gradient(model, support, query, first);
  double diff = 0.0;
  for (std::size_t j = 0; j < s1.grads.size(); ++j) {
    CHECK(testing::bit_equal(s1.grads[j], s2.grads[j]));
    CHECK(testing::bit_equal(f1.grads[j], f2.grads[j]));
    diff = std::max(diff, (s1.grads[j] - f1.grads[j]).cwiseAbs().maxCoeff());
  }
  CHECK(diff > 1e-8);
  CHECK(s1.loss == f1.loss);
}

TEST_CASE("degenerate MetaBalance replays baseline training bit for bit") {
  const Dataset train = two_blobs(60, 15, 3);
  auto model = nn::Mlp::build(tiny_spec(), 11);

  for (auto opt : {optim::sgd_nesterov(0.05, 0.9, 5e-4), optim::adam(1e-3)}) {
    MetaTrainConfig meta;
    meta.gamma = 0.0;
    meta.beta = 0.0;
    meta.meta_steps = 3;
    meta.support_batch = 5;
    meta.query_batch = 8;
    meta.outer_steps_per_epoch = 7;
    meta.epochs = 3;
    meta.optimizer = opt;
    meta.seed = 42;

    BaselineConfig base;
    base.optimizer = opt;
    base.epochs = 3;
    base.batch_size = 8;
    base.accumulation_steps = 3;
    base.steps_per_epoch = 7;
    base.seed = 42;

    auto m = train_metabalance(model, train, meta);
    auto b = train_baseline(model, train, base);
    const auto mv = m.model.parameter_values(), bv = b.model.parameter_values();
    for (std::size_t j = 0; j < mv.size(); ++j) CHECK(testing::bit_equal(mv[j], bv[j]));
    CHECK(m.log.epochs.back().updates == b.log.epochs.back().updates);
    // parameters moved
    CHECK_FALSE(testing::bit_equal(mv[0], model.parameter_values()[0]));
  }
}

TEST_CASE("baseline epochs are ceil(n / batch) updates") {
  const Dataset train = two_blobs(40, 10, 4);
  BaselineConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 24;
  auto r = train_baseline(nn::Mlp::build(tiny_spec(), 1), train, cfg);
  REQUIRE(r.log.epochs.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) CHECK(r.log.epochs[e].updates == 3 * (e + 1));

  cfg.accumulation_steps = 2;
  auto acc = train_baseline(nn::Mlp::build(tiny_spec(), 1), train, cfg);
  CHECK(acc.log.epochs.back().updates == 3 * 2);  // ceil(50 / 48) per epoch
}

TEST_CASE("MetaBalance epochs are ceil(n / (meta_steps * support_batch)) outer updates") {
  const Dataset train = two_blobs(40, 10, 4);
  MetaTrainConfig cfg;
  cfg.meta_steps = 2;
  cfg.support_batch = 8;
  cfg.query_batch = 8;
  cfg.epochs = 2;
  auto r = train_metabalance(nn::Mlp::build(tiny_spec(), 1), train, cfg);
  CHECK(r.log.epochs.back().updates == 2 * 4);
}

TEST_CASE("learning rate 0 leaves parameters unchanged") {
  const Dataset train = two_blobs(30, 10, 5);
  auto model = nn::Mlp::build(tiny_spec(), 2);
  BaselineConfig base;
  base.optimizer = optim::adam(0.0);
  base.epochs = 2;
  auto b = train_baseline(model, train, base);
  MetaTrainConfig meta;
  meta.optimizer = optim::sgd_nesterov(0.0, 0.9, 5e-4);
  meta.meta_steps = 2;
  auto m = train_metabalance(model, train, meta);
  const auto before = model.parameter_values();
  for (std::size_t j = 0; j < before.size(); ++j) {
    CHECK(testing::bit_equal(b.model.parameter_values()[j], before[j]));
    CHECK(testing::bit_equal(m.model.parameter_values()[j], before[j]));
  }
}

TEST_CASE("meta-gradient norm above the cap raises TrainingError") {
  const Dataset train = two_blobs(30, 10, 6);
  MetaTrainConfig cfg;
  cfg.meta_steps = 2;
  cfg.grad_norm_cap = 1e-12;
  try {
    train_metabalance(nn::Mlp::build(tiny_spec(), 3), train, cfg);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 0") != std::string::npos);
    CHECK(msg.find("layer") != std::string::npos);
  }
}

TEST_CASE("divergence raises TrainingError naming epoch and batch") {
  Dataset train = two_blobs(30, 10, 7);
  train.features *= 1e150;
  BaselineConfig base;
  base.optimizer = optim::sgd_nesterov(1.0, 0.0, 0.0);
  base.epochs = 5;
  base.batch_size = 8;
  try {
    train_baseline(nn::Mlp::build(tiny_spec(), 4), train, base);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch") != std::string::npos);
    CHECK(msg.find("batch") != std::string::npos);
  }

  MetaTrainConfig meta;
  meta.optimizer = optim::sgd_nesterov(1.0, 0.0, 0.0);
  meta.meta_steps = 2;
  meta.epochs = 5;
  meta.grad_norm_cap = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(train_metabalance(nn::Mlp::build(tiny_spec(), 4), train, meta), TrainingError);
}

TEST_CASE("training log has one record per epoch and survives a CSV round trip") {
  const Dataset train = two_blobs(40, 12, 8), test = two_blobs(20, 6, 9);
  BaselineConfig cfg;
  cfg.epochs = 4;
  cfg.seed = 17;
  auto r = train_baseline(nn::Mlp::build(tiny_spec(), 5), train, cfg, {&train, &test});
  REQUIRE(r.log.epochs.size() == 4);
  auto dir = testing::temp_dir("trainlog");
  r.log.write_csv(dir / "log.csv");
  auto back = TrainLog::read_csv(dir / "log.csv");
  REQUIRE(back.epochs.size() == 4);
  for (std::size_t e = 0; e < 4; ++e) {
    const auto &a = r.log.epochs[e], &b = back.epochs[e];
    CHECK(b.epoch == a.epoch);
    CHECK(b.epoch == static_cast<int>(e));
    CHECK(b.updates == a.updates);
    CHECK(b.seed == 17);
    CHECK(b.lr == a.lr);
    CHECK(b.train_loss == a.train_loss);
    CHECK(b.test_loss == a.test_loss);
    CHECK(b.train_accuracy == a.train_accuracy);
    CHECK(b.test_accuracy == a.test_accuracy);
    CHECK(a.train_accuracy.size() == 2);
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  const Dataset train = two_blobs(40, 12, 10);
  MetaTrainConfig cfg;
  cfg.inner_sampler.kind = SamplerKind::smote;
  cfg.outer_sampler.kind = SamplerKind::random_under;
  cfg.meta_steps = 2;
  cfg.epochs = 2;
  cfg.seed = 3;
  auto model = nn::Mlp::build(tiny_spec(), 6);
  auto a = train_metabalance(model, train, cfg), b = train_metabalance(model, train, cfg);
  for (std::size_t j = 0; j < a.model.parameters().size(); ++j)
    CHECK(testing::bit_equal(a.model.parameter_values()[j], b.model.parameter_values()[j]));
  cfg.seed = 4;
  auto c = train_metabalance(model, train, cfg);
  CHECK_FALSE(testing::bit_equal(a.model.parameter_values()[0], c.model.parameter_values()[0]));
}

TEST_CASE("mean_and_std_err") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  auto [mean, se] = mean_and_std_err(v);
  CHECK(mean == 2.5);
  CHECK(se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-15));
  auto [m1, s1] = mean_and_std_err(std::vector<double>{0.7});
  CHECK(m1 == 0.7);
  CHECK(std::isnan(s1));
}

TEST_CASE("a 1x1 strategy grid equals a single run") {
  const Dataset train = two_blobs(40, 12, 11), test = two_blobs(20, 6, 12);
  MetaTrainConfig cfg;
  cfg.meta_steps = 2;
  cfg.epochs = 2;
  auto g = strategy_grid(train, test, tiny_spec(), {SamplerKind::natural}, {SamplerKind::random_under}, cfg, {5});
  REQUIRE(g.cells[0][0].values.size() == 1);
  cfg.outer_sampler.kind = SamplerKind::random_under;
  cfg.seed = 5;
  auto single = train_metabalance(nn::Mlp::build(tiny_spec(), derive_seed(5, streams::model_init)), train, cfg);
  CHECK(g.cells[0][0].values[0] == headline_metric(single.model, test));
  CHECK(std::isnan(g.cells[0][0].std_err));
}

TEST_CASE("failing grid cells are recorded and the grid completes") {
  const Dataset train = two_blobs(40, 12, 13), test = two_blobs(20, 6, 14);
  MetaTrainConfig cfg;
  cfg.meta_steps = 2;
  cfg.grad_norm_cap = 1e-12;
  GridResult g;
  REQUIRE_NOTHROW(g = strategy_grid(train, test, tiny_spec(), {SamplerKind::natural, SamplerKind::enn},
                                    {SamplerKind::natural}, cfg, {1, 2}));
  for (const auto& row : g.cells) {
    CHECK(row[0].values.empty());
    CHECK(row[0].failures.size() == 2);
    CHECK(row[0].failures[0].find("seed 1") != std::string::npos);
  }
  auto dir = testing::temp_dir("grid");
  g.write_csv(dir / "grid.csv");
  CHECK(std::filesystem::file_size(dir / "grid.csv") > 0);
}

TEST_CASE("parallel grid equals serial grid") {
  const Dataset train = two_blobs(40, 12, 15), test = two_blobs(20, 6, 16);
  MetaTrainConfig cfg;
  cfg.meta_steps = 2;
  const std::vector<SamplerKind> kinds{SamplerKind::natural, SamplerKind::random_over};
  auto serial = strategy_grid(train, test, tiny_spec(), kinds, kinds, cfg, {1, 2}, 1);
  auto parallel = strategy_grid(train, test, tiny_spec(), kinds, kinds, cfg, {1, 2}, 3);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) CHECK(serial.cells[r][c].values == parallel.cells[r][c].values);
}

TEST_CASE("config validation") {
  MetaTrainConfig m;
  m.meta_steps = 0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = {};
  m.gamma = -1.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  BaselineConfig b;
  b.batch_size = 0;
  CHECK_THROWS_AS(b.validate(), ConfigError);
}

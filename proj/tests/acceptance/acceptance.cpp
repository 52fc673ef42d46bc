// Acceptance checks, one PASS / FAIL / SKIP line per criterion.
//
//   acceptance <group>   group: numerical | synthetic | determinism | fraud | loan | all
//
// Exit code 0 when every criterion of the group passes, 1 on any failure,
// 77 when the group was skipped (dataset not available).

#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <chrono>
#include <cstring>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "metabalance/autodiff/check.hpp"
#include "metabalance/autodiff/ops.hpp"
#include "metabalance/eval/metrics.hpp"
#include "metabalance/experiment/config.hpp"
#include "metabalance/experiment/runner.hpp"
#include "metabalance/nn/loss.hpp"
#include "metabalance/optim/optimizer.hpp"
#include "metabalance/train/trainer.hpp"

using namespace metabalance;
namespace fs = std::filesystem;
using ad::MatrixD;
using ad::Tensor;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kSkip = 77;

struct Report {
  int passed = 0, failed = 0, skipped = 0;

  void line(bool ok, const std::string& name, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
    (ok ? passed : failed)++;
  }
  void skip(const std::string& name, const std::string& reason) {
    std::cout << "SKIP " << name << ": " << reason << std::endl;
    ++skipped;
  }
  int exit_code() const {
    if (failed > 0) return 1;
    if (passed == 0 && skipped > 0) return kSkip;
    return 0;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

MatrixD gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  MatrixD m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

std::vector<int> random_labels(std::size_t n, int classes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(rng() % static_cast<std::uint64_t>(classes));
  for (int c = 0; c < classes && static_cast<std::size_t>(c) < n; ++c) y[static_cast<std::size_t>(c)] = c;
  return y;
}

// ---------------------------------------------------------------------------
// numerical

struct LossCase {
  std::string name;
  nn::MlpSpec spec;
  nn::LossSpec loss;
  bool soft = false;
};

std::vector<LossCase> loss_cases() {
  nn::MlpSpec fraud = nn::fraud_mlp_spec();
  fraud.dropout.reset();
  nn::MlpSpec multi{6, {8, 7}, 4, std::nullopt, nn::Activation::relu};
  nn::LossSpec bce, ce, focal;
  ce.kind = nn::LossKind::cross_entropy;
  focal.kind = nn::LossKind::focal;
  focal.focal_gamma = 2.0;
  focal.class_weights = std::vector<double>{0.5, 1.0, 2.0, 1.5};
  return {{"fraud network, BCE", fraud, bce, false},
          {"loan network, BCE", nn::loan_mlp_spec(), bce, false},
          {"4-class network, cross-entropy", multi, ce, false},
          {"4-class network, weighted focal", multi, focal, false},
          {"4-class network, soft targets", multi, ce, true}};
}

ad::Objective loss_objective(const nn::Mlp& model, const MatrixD& x, const nn::Targets& t, const nn::LossSpec& spec) {
  return [&model, x, t, spec](const std::vector<Tensor>& p) {
    return nn::loss(model.forward(p, ad::constant(x), nn::Mode::eval), t, spec);
  };
}

nn::Targets targets_for(const LossCase& c, std::size_t n, std::uint64_t seed) {
  const int classes = static_cast<int>(c.spec.num_classes());
  if (!c.soft) return nn::Targets::hard(random_labels(n, classes, seed));
  MatrixD p = gaussian(static_cast<Eigen::Index>(n), classes, seed).array().exp();
  for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= p.row(i).sum();
  return nn::Targets::soft(p);
}

// Zero biases put rows whose previous layer is all inactive exactly on the
// ReLU kink, where central differences are meaningless.
nn::Mlp with_random_biases(nn::Mlp model, std::uint64_t seed) {
  auto values = model.parameter_values();
  for (std::size_t j = 1; j < values.size(); j += 2)
    values[j] = gaussian(values[j].rows(), values[j].cols(), seed + 1000 * j, 0.1);
  model.set_parameter_values(values);
  return model;
}

void first_order_checks(Report& r) {
  double worst = 0.0;
  std::string where;
  int checks = 0;
  for (const auto& c : loss_cases()) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      auto model = with_random_biases(nn::Mlp::build(c.spec, 100 + seed), 150 + seed);
      const MatrixD x = gaussian(12, static_cast<Eigen::Index>(c.spec.input_dim), 200 + seed);
      const auto t = targets_for(c, 12, 300 + seed);
      const double e = ad::gradient_check(loss_objective(model, x, t, c.loss), model.parameter_values());
      ++checks;
      if (e > worst) worst = e, where = c.name;
    }
  }
  r.line(worst < 1e-6, "numerical/first-order gradients",
         fmt::format("worst relative error {:.3e} over {} network/loss checks ({}) < 1e-6", worst, checks, where));
}

Tensor half_sq_dist(std::span<const Tensor> params, const std::vector<MatrixD>& centre) {
  Tensor total = Tensor::scalar(0.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor d = ad::sub(params[i], ad::constant(centre[i]));
    total = ad::add(total, ad::scale(ad::sum(ad::mul(d, d)), 0.5));
  }
  return total;
}

// Value of sum_i [ L(theta_i', Z_i) + beta L(theta, X_i) ] with theta_i' = theta - gamma grad L(theta, X_i).
double unrolled_objective(const nn::Mlp& m, const std::vector<MatrixD>& theta, const std::vector<resample::Batch>& support,
                          const std::vector<resample::Batch>& query, const nn::LossSpec& spec, double gamma,
                          double beta) {
  std::vector<Tensor> p;
  for (const auto& v : theta) p.push_back(Tensor::parameter(v));
  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    Tensor lx = nn::loss(m.forward(p, ad::constant(support[i].x), nn::Mode::eval),
                         train::batch_targets(support[i]), spec);
    auto g = ad::grad(lx, std::span<const Tensor>(p));
    std::vector<Tensor> adapted;
    for (std::size_t j = 0; j < p.size(); ++j)
      adapted.push_back(ad::constant(MatrixD(theta[j] - gamma * g[j].value())));
    total += nn::loss(m.forward(adapted, ad::constant(query[i].x), nn::Mode::eval),
                      train::batch_targets(query[i]), spec)
                 .item() +
             beta * lx.item();
  }
  return total;
}

void second_order_checks(Report& r) {
  double worst = 0.0;
  int checks = 0;
  for (const auto& c : loss_cases()) {
    if (c.soft) continue;
    nn::MlpSpec spec = c.spec;
    if (spec.hidden_widths.size() > 2) spec.hidden_widths = {6, 5};  // keeps finite differences cheap
    auto model = with_random_biases(nn::Mlp::build(spec, 7), 8);
    const int classes = static_cast<int>(spec.num_classes());
    std::vector<resample::Batch> support, query;
    for (std::uint64_t i = 0; i < 2; ++i) {
      support.push_back({gaussian(6, static_cast<Eigen::Index>(spec.input_dim), 400 + i),
                         random_labels(6, classes, 500 + i), std::nullopt});
      query.push_back({gaussian(5, static_cast<Eigen::Index>(spec.input_dim), 600 + i),
                       random_labels(5, classes, 700 + i), std::nullopt});
    }
    for (double beta : {0.0, 0.3}) {
      train::MetaTrainConfig cfg;
      cfg.gamma = 0.5;
      cfg.beta = beta;
      cfg.loss = c.loss;
      const auto mg = train::meta_gradient(model, support, query, cfg);
      const auto theta = model.parameter_values();
      std::vector<MatrixD> fd;
      const double h = 1e-6;
      for (std::size_t j = 0; j < theta.size(); ++j) {
        MatrixD g(theta[j].rows(), theta[j].cols());
        for (Eigen::Index e = 0; e < theta[j].size(); ++e) {
          auto plus = theta, minus = theta;
          plus[j].data()[e] += h;
          minus[j].data()[e] -= h;
          g.data()[e] = (unrolled_objective(model, plus, support, query, c.loss, cfg.gamma, beta) -
                         unrolled_objective(model, minus, support, query, c.loss, cfg.gamma, beta)) /
                        (2 * h);
        }
        fd.push_back(std::move(g));
      }
      worst = std::max(worst, ad::relative_error(ad::detail::flatten(mg.grads), ad::detail::flatten(fd)));
      ++checks;
    }
    // Hessian-vector products through the tape
    const MatrixD x = gaussian(10, static_cast<Eigen::Index>(spec.input_dim), 800);
    const auto t = nn::Targets::hard(random_labels(10, classes, 801));
    const auto at = model.parameter_values();
    std::vector<Eigen::VectorXd> dirs;
    for (std::uint64_t d = 0; d < 3; ++d) dirs.push_back(ad::detail::flatten({gaussian(1, static_cast<Eigen::Index>(model.parameter_count()), 900 + d)}));
    worst = std::max(worst, ad::grad_of_grad_check(loss_objective(model, x, t, c.loss), at, dirs));
    ++checks;
  }
  r.line(worst < 1e-4, "numerical/second-order meta-gradients",
         fmt::format("worst relative error {:.3e} over {} meta-gradient and HVP checks < 1e-4", worst, checks));
}

void quadratic_check(Report& r) {
  // L_X = 0.5 |theta - a_i|^2, L_Z = 0.5 |theta - b_i|^2: the outer step is
  // theta - eta sum_i [(1 - gamma)(theta_i' - b_i) + beta (theta - a_i)].
  double worst = 0.0;
  for (double gamma : {0.0, 0.05, 0.5}) {
    for (double beta : {0.0, 0.2}) {
      const std::vector<MatrixD> theta{gaussian(4, 3, 1), gaussian(1, 3, 2)};
      std::vector<Tensor> params;
      for (const auto& v : theta) params.push_back(Tensor::parameter(v));
      const std::size_t k = 4;
      std::vector<std::vector<MatrixD>> a(k), b(k);
      std::vector<train::LossFn> support, query;
      for (std::size_t i = 0; i < k; ++i) {
        a[i] = {gaussian(4, 3, 10 + i), gaussian(1, 3, 20 + i)};
        b[i] = {gaussian(4, 3, 30 + i), gaussian(1, 3, 40 + i)};
        support.push_back([c = a[i]](std::span<const Tensor> p) { return half_sq_dist(p, c); });
        query.push_back([c = b[i]](std::span<const Tensor> p) { return half_sq_dist(p, c); });
      }
      const auto mg = train::meta_gradient(params, support, query, {gamma, beta, false, false});
      const double eta = 0.1;
      optim::Optimizer opt(optim::sgd_nesterov(eta, 0.0, 0.0), {"w", "b"});
      opt.step(params, mg.grads);
      for (std::size_t j = 0; j < theta.size(); ++j) {
        MatrixD g = MatrixD::Zero(theta[j].rows(), theta[j].cols());
        for (std::size_t i = 0; i < k; ++i)
          g += (1.0 - gamma) * (theta[j] - gamma * (theta[j] - a[i][j]) - b[i][j]) + beta * (theta[j] - a[i][j]);
        worst = std::max(worst, (mg.grads[j] - g).cwiseAbs().maxCoeff());
        worst = std::max(worst, (params[j].value() - (theta[j] - eta * g)).cwiseAbs().maxCoeff());
      }
    }
  }
  r.line(worst <= 1e-10, "numerical/quadratic closed form",
         fmt::format("max abs deviation {:.3e} from the analytic meta-gradient and update <= 1e-10", worst));
}

double pair_counting_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

void auc_check(Report& r) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(derive_seed(seed, 77));
    std::uniform_int_distribution<int> size(2, 400);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = size(rng);
    const double prevalence = 0.02 + 0.96 * unit(rng);
    const int resolution = seed % 3 == 0 ? 8 : 0;  // coarse scores produce ties
    std::vector<double> s;
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
      const int label = unit(rng) < prevalence ? 1 : 0;
      double v = unit(rng) + 0.25 * label;
      if (resolution) v = std::round(v * resolution) / resolution;
      s.push_back(v);
      y.push_back(label);
    }
    y[0] = 1;
    y[1] = 0;
    worst = std::max(worst, std::abs(eval::roc_auc(s, y) - pair_counting_auc(s, y)));
  }
  r.line(worst <= 1e-12, "numerical/ROC-AUC oracle",
         fmt::format("max |roc_auc - pair counting| {:.3e} over 1000 random instances <= 1e-12", worst));
}

// The sampler property suite (counts, subset and segment membership,
// brute-force k-NN oracles on <= 500-row datasets) compiled into this binary.
void sampler_checks(Report& r) {
  doctest::Context ctx;
  std::ostringstream out;
  ctx.setCout(&out);
  ctx.setOption("no-colors", true);
  const int rc = ctx.run();
  std::string tail = out.str();
  const auto pos = tail.find("test cases:");
  std::string summary = pos == std::string::npos ? "" : tail.substr(pos, tail.find('\n', pos) - pos);
  r.line(rc == 0, "numerical/sampler invariants", summary.empty() ? "no summary" : summary);
  if (rc != 0) std::cout << tail;
}

void numerical(Report& r) {
  const auto t0 = Clock::now();
  first_order_checks(r);
  second_order_checks(r);
  quadratic_check(r);
  auc_check(r);
  sampler_checks(r);
  const double s = seconds_since(t0);
  r.line(s <= 300.0, "numerical/runtime", fmt::format("{:.1f} s <= 300 s", s));
}

// ---------------------------------------------------------------------------
// synthetic

struct StrategyScore {
  double minority = 0.0;          // mean over seeds of the mean minority-class accuracy
  double balanced = 0.0;          // mean over seeds
  double balanced_adjusted = 0.0; // prior-adjusted scores
  std::uint64_t updates = 0;
};

StrategyScore score_preset(const std::string& name, const experiment::PreparedData& data) {
  const auto config = experiment::preset(name);
  StrategyScore s;
  const int majority = data.train.majority_class();
  for (auto seed : config.seeds) {
    const auto trained = experiment::train_seed(config, data, seed);
    const auto o = experiment::evaluate_seed(trained.model, data, seed);
    double minority = 0.0;
    int n = 0;
    for (const auto& [c, a] : o.metrics.per_class_accuracy)
      if (c != majority) minority += a, ++n;
    s.minority += minority / n;
    s.balanced += o.metrics.balanced_accuracy;
    s.balanced_adjusted += o.prior_adjusted ? o.prior_adjusted->balanced_accuracy : std::nan("");
    s.updates = trained.log.epochs.back().updates;
  }
  const double k = static_cast<double>(config.seeds.size());
  s.minority /= k;
  s.balanced /= k;
  s.balanced_adjusted /= k;
  return s;
}

void synthetic(Report& r) {
  const auto t0 = Clock::now();
  for (const std::string prefix : {"synthetic_", "synthetic_moderate_"}) {
    const std::string setting = prefix == "synthetic_" ? "severe {5000, 5x9}" : "moderate {5000, U[5,50]x9}";
    const auto data = experiment::prepare_data(experiment::preset(prefix + "naive").dataset);
    const auto naive = score_preset(prefix + "naive", data);
    const auto over = score_preset(prefix + "over", data);
    const auto meta = score_preset(prefix + "metabal", data);
    const std::string tag = "synthetic/" + std::string(prefix == "synthetic_" ? "severe" : "moderate");
    r.line(naive.updates == over.updates && over.updates == meta.updates, tag + " matched updates",
           fmt::format("naive {}, over {}, metabalance {} gradient updates", naive.updates, over.updates,
                       meta.updates));
    r.line(meta.minority > naive.minority && meta.minority > over.minority, tag + " minority accuracy",
           fmt::format("{}: metabalance {:.4f} vs naive {:.4f}, oversampling {:.4f}", setting, meta.minority,
                       naive.minority, over.minority));
    r.line(meta.balanced > naive.balanced_adjusted, tag + " balanced accuracy",
           fmt::format("{}: metabalance {:.4f} vs prior-adjusted naive {:.4f} (unadjusted {:.4f})", setting,
                       meta.balanced, naive.balanced_adjusted, naive.balanced));
  }
  const double s = seconds_since(t0);
  r.line(s <= 600.0, "synthetic/runtime", fmt::format("{:.1f} s <= 600 s", s));
}

// ---------------------------------------------------------------------------
// determinism

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Reported outputs of a run directory that do not contain timings.
std::map<std::string, std::string> reported(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (name == "train_log.csv" || name == "manifest.json") continue;
    out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

void determinism(Report& r) {
  struct Case {
    std::string label, patch;
  };
  const std::vector<Case> cases{
      {"MetaBalance, SMOTE inner / under outer, 2 threads",
       R"({"preset": "synthetic_moderate_metabal", "metabalance": {"epochs": 2, "outer_steps_per_epoch": 10,
           "meta_steps": 8, "inner_sampler": {"kind": "smote"}, "schedule": {"total_epochs": 2}},
           "seeds": [0, 1], "threads": 2})"},
      {"baseline, mixup",
       R"({"preset": "synthetic_naive", "baseline": {"epochs": 2, "steps_per_epoch": 20, "sampler": {"kind": "mixup"},
           "schedule": {"total_epochs": 2}}, "seeds": [3]})"},
      {"baseline, cluster centroids, dropout",
       R"({"preset": "synthetic_over", "model": {"dropout": {"after_layer": 1, "probability": 0.3}},
           "baseline": {"epochs": 2, "steps_per_epoch": 20, "sampler": {"kind": "cluster_centroids"},
           "schedule": {"total_epochs": 2}}, "seeds": [5]})"}};
  const auto root = fs::temp_directory_path() / "metabalance_acceptance_determinism";
  for (const auto& c : cases) {
    const auto config = experiment::parse_config(c.patch);
    const auto data = experiment::prepare_data(config.dataset);
    fs::remove_all(root);
    const auto a = experiment::run_experiment(config, data, root / "a");
    const auto b = experiment::run_experiment(config, data, root / "b");
    const auto ra = reported(root / "a"), rb = reported(root / "b");
    bool same = a.failures() == 0 && b.failures() == 0 && ra.size() == rb.size();
    for (const auto& [path, bytes] : ra) {
      auto it = rb.find(path);
      same = same && it != rb.end() && it->second == bytes;
    }
    same = same && std::memcmp(&a.mean, &b.mean, sizeof(double)) == 0;
    r.line(same, "determinism/" + c.label,
           fmt::format("{} metric and checkpoint files compared byte for byte, mean {:.17g}", ra.size(), a.mean));
  }
  fs::remove_all(root);
}

// ---------------------------------------------------------------------------
// fraud / loan

bool dataset_available(const std::string& preset_name, Report& r, const std::string& group) {
  const auto path = experiment::resolve_data_path(experiment::preset(preset_name).dataset.path);
  if (fs::exists(path)) return true;
  r.skip(group, fmt::format("{} not found (set METABALANCE_DATA_DIR to the directory holding it)", path.string()));
  return false;
}

struct PresetRun {
  double mean = 0.0;
  double seconds = 0.0;
  std::size_t failures = 0;
};

PresetRun run_preset(const std::string& name, const experiment::PreparedData& data) {
  const auto t0 = Clock::now();
  const auto config = experiment::preset(name);
  const auto out = fs::temp_directory_path() / ("metabalance_acceptance_" + name);
  const auto m = experiment::run_experiment(config, data, out);
  return {m.mean, seconds_since(t0), m.failures()};
}

void check_range(Report& r, const std::string& name, const PresetRun& run, double centre, double tol,
                 double budget_s) {
  r.line(run.failures == 0 && std::abs(run.mean - centre) <= tol, name,
         fmt::format("mean ROC-AUC {:.4f} in {:.3f} +- {:.3f} ({} failed seeds)", run.mean, centre, tol, run.failures));
  r.line(run.seconds <= budget_s, name + " runtime", fmt::format("{:.0f} s <= {:.0f} s", run.seconds, budget_s));
}

void fraud(Report& r) {
  if (!dataset_available("fraud_naive", r, "fraud")) return;
  const auto data = experiment::prepare_data(experiment::preset("fraud_naive").dataset);
  const auto naive = run_preset("fraud_naive", data);
  check_range(r, "fraud/naive", naive, 0.967, 0.018, 1800);
  check_range(r, "fraud/undersampling", run_preset("fraud_under", data), 0.977, 0.009, 1800);
  check_range(r, "fraud/metabalance (outer under)", run_preset("fraud_metabal", data), 0.979, 0.012, 1800);
  const auto ms = run_preset("fraud_msmetabal", data);
  check_range(r, "fraud/ms-metabalance", ms, 0.985, 0.006, 1800);
  r.line(ms.mean > naive.mean, "fraud/ms-metabalance above naive",
         fmt::format("{:.4f} > {:.4f}", ms.mean, naive.mean));
}

void loan(Report& r) {
  if (!dataset_available("loan_naive", r, "loan")) return;
  const auto data = experiment::prepare_data(experiment::preset("loan_naive").dataset);
  check_range(r, "loan/naive", run_preset("loan_naive", data), 0.648, 0.027, 600);
  check_range(r, "loan/enn", run_preset("loan_enn", data), 0.660, 0.006, 600);
  check_range(r, "loan/ms-metabalance (outer ENN)", run_preset("loan_msmetabal", data), 0.672, 0.012, 600);

  const auto config = experiment::preset("loan_grid");
  const auto g = experiment::run_grid(config, data, fs::temp_directory_path() / "metabalance_acceptance_loan_grid");
  const auto [row, col] = g.argmax();
  r.line(g.outer[col] == resample::SamplerKind::enn, "loan/grid best cell in ENN outer column",
         fmt::format("best cell inner {}, outer {} ({:.4f})", resample::to_string(g.inner[row]),
                     resample::to_string(g.outer[col]), g.cells[row][col].mean));
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, std::function<void(Report&)>> groups{
      {"numerical", numerical}, {"synthetic", synthetic}, {"determinism", determinism},
      {"fraud", fraud},         {"loan", loan}};
  if (argc != 2 || (groups.count(argv[1]) == 0 && std::string(argv[1]) != "all")) {
    std::cerr << "usage: acceptance <numerical|synthetic|determinism|fraud|loan|all>\n";
    return 2;
  }
  spdlog::set_level(spdlog::level::err);
  Report r;
  try {
    for (const auto& [name, run] : groups)
      if (name == argv[1] || std::string(argv[1]) == "all") run(r);
  } catch (const std::exception& e) {
    r.line(false, argv[1], std::string("aborted: ") + e.what());
  }
  std::cout << fmt::format("{} passed, {} failed, {} skipped", r.passed, r.failed, r.skipped) << std::endl;
  return r.exit_code();
}

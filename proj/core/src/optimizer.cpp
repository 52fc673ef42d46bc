#include "metabalance/optim/optimizer.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "metabalance/errors.hpp"
#include "metabalance/serialize.hpp"

namespace metabalance::optim {

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::adam ? "adam" : "sgd_nesterov";
}

OptimizerKind optimizer_kind_from_string(const std::string& name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd_nesterov" || name == "sgd") return OptimizerKind::sgd_nesterov;
  throw ConfigError("unknown optimizer '" + name + "'");
}

void OptimizerSpec::validate() const {
  if (!(lr >= 0.0 && std::isfinite(lr))) throw ConfigError("optimizer: lr must be finite and >= 0");
  if (!(weight_decay >= 0.0 && std::isfinite(weight_decay)))
    throw ConfigError("optimizer: weight_decay must be finite and >= 0");
  if (kind == OptimizerKind::sgd_nesterov && !(momentum >= 0.0 && momentum < 1.0))
    throw ConfigError("optimizer: momentum must be in [0, 1)");
  if (kind == OptimizerKind::adam) {
    const auto [b1, b2] = adam_betas;
    if (!(b1 >= 0.0 && b1 < 1.0 && b2 >= 0.0 && b2 < 1.0))
      throw ConfigError("optimizer: adam betas must be in [0, 1)");
    if (!(adam_eps > 0.0 && std::isfinite(adam_eps)))
      throw ConfigError("optimizer: adam eps must be > 0");
  }
}

OptimizerSpec adam(double lr) {
  OptimizerSpec s;
  s.kind = OptimizerKind::adam;
  s.lr = lr;
  return s;
}

OptimizerSpec sgd_nesterov(double lr, double momentum, double weight_decay) {
  OptimizerSpec s;
  s.kind = OptimizerKind::sgd_nesterov;
  s.lr = lr;
  s.momentum = momentum;
  s.weight_decay = weight_decay;
  return s;
}

Optimizer::Optimizer(OptimizerSpec spec, std::vector<std::string> parameter_names)
    : spec_(std::move(spec)), names_(std::move(parameter_names)) {
  spec_.validate();
}

void Optimizer::step(std::span<Tensor> params, std::span<const MatrixD> grads, double lr) {
  if (params.size() != grads.size())
    throw ConfigError("optimizer: " + std::to_string(grads.size()) + " gradients for " +
                      std::to_string(params.size()) + " parameters");
  if (names_.size() != params.size()) names_.resize(params.size());
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].hasNaN())
      throw TrainingError("optimizer: NaN gradient for parameter '" +
                          (names_[i].empty() ? "#" + std::to_string(i) : names_[i]) + "'");
  }
  if (first_.empty()) {
    for (const auto& p : params) {
      first_.push_back(MatrixD::Zero(p.rows(), p.cols()));
      if (spec_.kind == OptimizerKind::adam) second_.push_back(MatrixD::Zero(p.rows(), p.cols()));
    }
  }
  ++steps_;
  const double wd = spec_.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const MatrixD& theta = params[i].value();
    MatrixD g = grads[i];
    if (wd != 0.0) g += wd * theta;
    if (spec_.kind == OptimizerKind::sgd_nesterov) {
      const double mu = spec_.momentum;
      if (mu != 0.0) {
        first_[i] = mu * first_[i] + g;
        g += mu * first_[i];
      }
      params[i].assign(theta - lr * g);
    } else {
      const auto [b1, b2] = spec_.adam_betas;
      first_[i] = b1 * first_[i] + (1.0 - b1) * g;
      second_[i] = b2 * second_[i] + (1.0 - b2) * g.cwiseProduct(g);
      const double t = static_cast<double>(steps_);
      const double c1 = 1.0 - std::pow(b1, t);
      const double c2 = 1.0 - std::pow(b2, t);
      const MatrixD m_hat = first_[i] / c1;
      const MatrixD v_hat = second_[i] / c2;
      const MatrixD update =
          m_hat.array() / (v_hat.array().sqrt() + spec_.adam_eps);
      params[i].assign(theta - lr * update);
    }
  }
}

void Optimizer::save_state(std::ostream& out) const {
  out << "optimizer " << to_string(spec_.kind) << " steps " << steps_ << " buffers "
      << first_.size() << " " << second_.size() << "\n";
  for (const auto& m : first_) write_matrix(out, m);
  for (const auto& m : second_) write_matrix(out, m);
}

void Optimizer::load_state(std::istream& in) {
  std::string tag, kind, steps_tag, buffers_tag;
  std::size_t n_first = 0, n_second = 0;
  std::uint64_t steps = 0;
  if (!(in >> tag >> kind >> steps_tag >> steps >> buffers_tag >> n_first >> n_second) ||
      tag != "optimizer" || steps_tag != "steps" || buffers_tag != "buffers")
    throw DataError("optimizer state: malformed header");
  if (kind != to_string(spec_.kind))
    throw DataError("optimizer state: saved for '" + kind + "', restoring into '" +
                    to_string(spec_.kind) + "'");
  std::vector<MatrixD> first, second;
  for (std::size_t i = 0; i < n_first; ++i) first.push_back(read_matrix(in));
  for (std::size_t i = 0; i < n_second; ++i) second.push_back(read_matrix(in));
  steps_ = steps;
  first_ = std::move(first);
  second_ = std::move(second);
}

}  // namespace metabalance::optim

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "metabalance/autodiff/tensor.hpp"

namespace metabalance::optim {

using ad::MatrixD;
using ad::Tensor;

enum class OptimizerKind { adam, sgd_nesterov };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& name);

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 1e-3;
  double momentum = 0.0;
  double weight_decay = 0.0;
  std::pair<double, double> adam_betas{0.9, 0.999};
  double adam_eps = 1e-8;

  void validate() const;
  bool operator==(const OptimizerSpec&) const = default;
};

/// Adam, lr 1e-3 (baselines on tabular data).
OptimizerSpec adam(double lr = 1e-3);
/// SGD with Nesterov momentum and L2 weight decay.
OptimizerSpec sgd_nesterov(double lr, double momentum, double weight_decay);

/**
 * Stateful update rule. Weight decay is coupled: wd * theta is added to the
 * gradient before the momentum / moment estimates.
 *
 *   Nesterov:  b <- mu b + g;  theta <- theta - lr (g + mu b)
 *   Adam:      m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2
 *              theta <- theta - lr (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
 */
class Optimizer {
 public:
  Optimizer(OptimizerSpec spec, std::vector<std::string> parameter_names);

  const OptimizerSpec& spec() const { return spec_; }
  std::uint64_t steps() const { return steps_; }

  /// Applies one update with learning rate `lr` (schedules pass the current
  /// value; the spec's lr is the base rate). Throws TrainingError naming the
  /// parameter when a gradient contains NaN.
  void step(std::span<Tensor> params, std::span<const MatrixD> grads, double lr);
  void step(std::span<Tensor> params, std::span<const MatrixD> grads) {
    step(params, grads, spec_.lr);
  }

  /// Text serialization with hex-float values; restore is bit-exact.
  void save_state(std::ostream& out) const;
  void load_state(std::istream& in);

 private:
  OptimizerSpec spec_;
  std::vector<std::string> names_;
  std::uint64_t steps_ = 0;
  std::vector<MatrixD> first_;   // momentum buffer / Adam m
  std::vector<MatrixD> second_;  // Adam v
};

}  // namespace metabalance::optim

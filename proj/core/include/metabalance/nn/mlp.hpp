#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metabalance/autodiff/tensor.hpp"
#include "metabalance/random.hpp"

namespace metabalance::nn {

using ad::MatrixD;
using ad::Tensor;

enum class Activation { relu };

/// Dropout applied to the output of hidden layer `after_layer` (1-based).
struct DropoutSpec {
  std::size_t after_layer = 0;
  double probability = 0.0;
};

struct MlpSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_widths;
  std::size_t output_dim = 1;
  std::optional<DropoutSpec> dropout;
  Activation activation = Activation::relu;

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;
  std::size_t parameter_count() const;
  /// Single logit, sigmoid + BCE.
  bool binary() const { return output_dim == 1; }
  /// Number of classes the head distinguishes (2 in binary mode).
  std::size_t num_classes() const { return binary() ? 2 : output_dim; }

  bool operator==(const MlpSpec&) const;
};

/// Fraud detection network: 29 -> 16 -> 24 -> 20 -> 24 -> 1, dropout 0.5
/// after the second hidden layer.
MlpSpec fraud_mlp_spec();
/// Loan default network: 12 -> 25 -> 1.
MlpSpec loan_mlp_spec();

enum class Mode { train, eval };

/**
 * Fully connected ReLU network. Parameters are stored as leaf tensors,
 * weight (in x out) then bias (1 x out) per layer, and the forward pass can
 * also be evaluated with an externally supplied parameter list of the same
 * layout, which is how adapted parameters are pushed through the network.
 */
class Mlp {
 public:
  /// Weights drawn U(-sqrt(6 / fan_in), sqrt(6 / fan_in)); biases zero.
  static Mlp build(const MlpSpec& spec, std::uint64_t seed);

  // Copies own fresh parameter leaves; they never alias the source.
  Mlp(const Mlp& other);
  Mlp& operator=(const Mlp& other);
  Mlp(Mlp&&) noexcept = default;
  Mlp& operator=(Mlp&&) noexcept = default;

  const MlpSpec& spec() const { return spec_; }
  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  const std::vector<std::string>& parameter_names() const { return names_; }
  std::size_t parameter_count() const;

  /// Logits (n x output_dim). `rng` is required in train mode when the spec
  /// has dropout.
  Tensor forward(const Tensor& x, Mode mode, Rng* rng = nullptr) const;
  Tensor forward(std::span<const Tensor> params, const Tensor& x, Mode mode,
                 Rng* rng = nullptr) const;

  /// Eval-mode class scores without recording: sigmoid probabilities
  /// (n x 1) in binary mode, softmax probabilities (n x C) otherwise.
  MatrixD predict_scores(const MatrixD& x) const;
  /// Argmax class predictions (threshold 0.5 in binary mode).
  std::vector<int> predict(const MatrixD& x) const;

  /// Copies parameter values (detached) for snapshots and comparison.
  std::vector<MatrixD> parameter_values() const;
  void set_parameter_values(const std::vector<MatrixD>& values);

 private:
  Mlp(MlpSpec spec, std::vector<Tensor> params, std::vector<std::string> names);

  MlpSpec spec_;
  std::vector<Tensor> params_;
  std::vector<std::string> names_;
};

}  // namespace metabalance::nn

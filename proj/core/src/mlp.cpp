#include "metabalance/nn/mlp.hpp"

#include <cmath>
#include <sstream>

#include "metabalance/autodiff/ops.hpp"
#include "metabalance/errors.hpp"

namespace metabalance::nn {

void MlpSpec::validate() const {
  if (input_dim == 0) throw ConfigError("mlp: input_dim must be positive");
  if (output_dim == 0) throw ConfigError("mlp: output_dim must be positive");
  for (std::size_t i = 0; i < hidden_widths.size(); ++i)
    if (hidden_widths[i] == 0)
      throw ConfigError("mlp: hidden layer " + std::to_string(i + 1) + " has zero width");
  if (dropout) {
    if (dropout->after_layer == 0 || dropout->after_layer > hidden_widths.size())
      throw ConfigError("mlp: dropout layer " + std::to_string(dropout->after_layer) +
                        " must name a hidden layer in [1, " +
                        std::to_string(hidden_widths.size()) + "]");
    if (!(dropout->probability >= 0.0 && dropout->probability < 1.0))
      throw ConfigError("mlp: dropout probability must be in [0, 1)");
  }
}

std::size_t MlpSpec::parameter_count() const {
  std::size_t count = 0;
  std::size_t fan_in = input_dim;
  for (std::size_t w : hidden_widths) {
    count += fan_in * w + w;
    fan_in = w;
  }
  return count + fan_in * output_dim + output_dim;
}

bool MlpSpec::operator==(const MlpSpec& o) const {
  const bool same_dropout =
      dropout.has_value() == o.dropout.has_value() &&
      (!dropout || (dropout->after_layer == o.dropout->after_layer &&
                    dropout->probability == o.dropout->probability));
  return input_dim == o.input_dim && hidden_widths == o.hidden_widths &&
         output_dim == o.output_dim && same_dropout && activation == o.activation;
}

MlpSpec fraud_mlp_spec() {
  MlpSpec s;
  s.input_dim = 29;
  s.hidden_widths = {16, 24, 20, 24};
  s.output_dim = 1;
  s.dropout = DropoutSpec{2, 0.5};
  return s;
}

MlpSpec loan_mlp_spec() {
  MlpSpec s;
  s.input_dim = 12;
  s.hidden_widths = {25};
  s.output_dim = 1;
  return s;
}

Mlp::Mlp(MlpSpec spec, std::vector<Tensor> params, std::vector<std::string> names)
    : spec_(std::move(spec)), params_(std::move(params)), names_(std::move(names)) {}

Mlp::Mlp(const Mlp& other) : spec_(other.spec_), names_(other.names_) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) params_.push_back(Tensor::parameter(p.value()));
}

Mlp& Mlp::operator=(const Mlp& other) {
  if (this != &other) {
    Mlp copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Mlp Mlp::build(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::vector<Tensor> params;
  std::vector<std::string> names;
  std::vector<std::size_t> widths = spec.hidden_widths;
  widths.push_back(spec.output_dim);
  std::size_t fan_in = spec.input_dim;
  for (std::size_t layer = 0; layer < widths.size(); ++layer) {
    const std::size_t fan_out = widths[layer];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    MatrixD w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    params.push_back(Tensor::parameter(std::move(w)));
    params.push_back(Tensor::parameter(MatrixD::Zero(1, fan_out)));
    names.push_back("layer" + std::to_string(layer) + ".weight");
    names.push_back("layer" + std::to_string(layer) + ".bias");
    fan_in = fan_out;
  }
  return Mlp(spec, std::move(params), std::move(names));
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.numel());
  return n;
}

Tensor Mlp::forward(const Tensor& x, Mode mode, Rng* rng) const {
  return forward(params_, x, mode, rng);
}

Tensor Mlp::forward(std::span<const Tensor> params, const Tensor& x, Mode mode, Rng* rng) const {
  if (params.size() != params_.size())
    throw ConfigError("mlp: expected " + std::to_string(params_.size()) +
                      " parameter tensors, got " + std::to_string(params.size()));
  if (static_cast<std::size_t>(x.cols()) != spec_.input_dim)
    throw ad::ShapeError("mlp: input has " + std::to_string(x.cols()) + " features, expected " +
                         std::to_string(spec_.input_dim));
  const std::size_t layers = params.size() / 2;
  Tensor h = x;
  for (std::size_t layer = 0; layer < layers; ++layer) {
    h = ad::add_bias(ad::matmul(h, params[2 * layer]), params[2 * layer + 1]);
    if (layer + 1 == layers) break;
    h = ad::relu(h);
    if (spec_.dropout && spec_.dropout->after_layer == layer + 1 && mode == Mode::train &&
        spec_.dropout->probability > 0.0) {
      if (rng == nullptr) throw ConfigError("mlp: train-mode dropout requires a generator");
      h = ad::dropout(h, spec_.dropout->probability, true, *rng);
    }
  }
  return h;
}

MatrixD Mlp::predict_scores(const MatrixD& x) const {
  ad::NoGradGuard no_grad;
  const Tensor logits = forward(ad::constant(x), Mode::eval);
  if (spec_.binary()) return ad::sigmoid(logits).value();
  return ad::softmax(logits).value();
}

std::vector<int> Mlp::predict(const MatrixD& x) const {
  const MatrixD scores = predict_scores(x);
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    if (spec_.binary()) {
      out[static_cast<std::size_t>(i)] = scores(i, 0) > 0.5 ? 1 : 0;
    } else {
      Eigen::Index best = 0;
      scores.row(i).maxCoeff(&best);
      out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
  }
  return out;
}

std::vector<MatrixD> Mlp::parameter_values() const {
  std::vector<MatrixD> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value());
  return out;
}

void Mlp::set_parameter_values(const std::vector<MatrixD>& values) {
  if (values.size() != params_.size())
    throw ConfigError("mlp: parameter count mismatch on restore");
  for (std::size_t i = 0; i < values.size(); ++i) params_[i].assign(values[i]);
}

}  // namespace metabalance::nn

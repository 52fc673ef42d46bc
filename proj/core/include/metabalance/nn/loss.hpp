#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "metabalance/autodiff/tensor.hpp"

namespace metabalance::nn {

enum class LossKind { bce, cross_entropy, focal };

struct LossSpec {
  LossKind kind = LossKind::bce;
  double focal_gamma = 0.0;
  std::optional<std::vector<double>> class_weights;

  void validate(std::size_t num_classes) const;
  bool operator==(const LossSpec&) const = default;
};

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

/**
 * Training targets: hard class indices, or per-row class probability vectors
 * (n x C; in binary mode n x 1 holding P(class 1) is also accepted).
 */
class Targets {
 public:
  static Targets hard(std::vector<int> labels) { return Targets(std::move(labels)); }
  static Targets soft(ad::MatrixD probabilities) { return Targets(std::move(probabilities)); }

  bool is_hard() const { return std::holds_alternative<std::vector<int>>(data_); }
  const std::vector<int>& labels() const { return std::get<std::vector<int>>(data_); }
  const ad::MatrixD& probabilities() const { return std::get<ad::MatrixD>(data_); }
  std::size_t rows() const;

  /// Dense n x num_classes probability matrix; validates indices and row sums.
  ad::MatrixD to_matrix(std::size_t num_classes) const;

 private:
  explicit Targets(std::vector<int> labels) : data_(std::move(labels)) {}
  explicit Targets(ad::MatrixD p) : data_(std::move(p)) {}
  std::variant<std::vector<int>, ad::MatrixD> data_;
};

/**
 * Mean loss over the batch.
 *
 * Per row, with class probabilities p and target distribution t:
 *   -sum_c w_c t_c (1 - p_c)^gamma log p_c
 * where gamma is 0 for BCE / cross-entropy and w defaults to 1. A single
 * logit column is treated as a two-class sigmoid head.
 */
ad::Tensor loss(const ad::Tensor& logits, const Targets& targets, const LossSpec& spec);

}  // namespace metabalance::nn

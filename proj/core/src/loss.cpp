#include "metabalance/nn/loss.hpp"

#include <cmath>

#include "metabalance/autodiff/ops.hpp"
#include "metabalance/errors.hpp"

namespace metabalance::nn {

using ad::MatrixD;
using ad::Tensor;

namespace {

constexpr double kRowSumTolerance = 1e-9;

}  // namespace

void LossSpec::validate(std::size_t num_classes) const {
  if (kind == LossKind::focal && !(focal_gamma >= 0.0 && std::isfinite(focal_gamma)))
    throw ConfigError("loss: focal gamma must be a finite value >= 0");
  if (class_weights) {
    if (class_weights->size() != num_classes)
      throw ConfigError("loss: expected " + std::to_string(num_classes) +
                        " class weights, got " + std::to_string(class_weights->size()));
    for (double w : *class_weights)
      if (!(w > 0.0 && std::isfinite(w))) throw ConfigError("loss: class weights must be > 0");
  }
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::bce: return "bce";
    case LossKind::cross_entropy: return "cross_entropy";
    case LossKind::focal: return "focal";
  }
  return "unknown";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "bce") return LossKind::bce;
  if (name == "cross_entropy" || name == "ce") return LossKind::cross_entropy;
  if (name == "focal") return LossKind::focal;
  throw ConfigError("unknown loss kind '" + name + "'");
}

std::size_t Targets::rows() const {
  return is_hard() ? labels().size() : static_cast<std::size_t>(probabilities().rows());
}

MatrixD Targets::to_matrix(std::size_t num_classes) const {
  const auto c = static_cast<Eigen::Index>(num_classes);
  if (is_hard()) {
    const auto& y = labels();
    MatrixD m = MatrixD::Zero(static_cast<Eigen::Index>(y.size()), c);
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] < 0 || y[i] >= c)
        throw ConfigError("loss: target class " + std::to_string(y[i]) + " at row " +
                          std::to_string(i) + " outside [0, " + std::to_string(num_classes) +
                          ")");
      m(static_cast<Eigen::Index>(i), y[i]) = 1.0;
    }
    return m;
  }
  MatrixD p = probabilities();
  if (num_classes == 2 && p.cols() == 1) {
    MatrixD two(p.rows(), 2);
    two.col(0) = (1.0 - p.col(0).array()).matrix();
    two.col(1) = p.col(0);
    p = std::move(two);
  }
  if (p.cols() != c)
    throw ConfigError("loss: soft targets have " + std::to_string(p.cols()) +
                      " columns, expected " + std::to_string(num_classes));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    if ((p.row(i).array() < 0.0).any())
      throw ConfigError("loss: negative target probability at row " + std::to_string(i));
    if (std::abs(p.row(i).sum() - 1.0) > kRowSumTolerance)
      throw ConfigError("loss: soft target row " + std::to_string(i) + " sums to " +
                        std::to_string(p.row(i).sum()));
  }
  return p;
}

Tensor loss(const Tensor& logits, const Targets& targets, const LossSpec& spec) {
  if (!logits.value().allFinite()) {
    for (Eigen::Index i = 0; i < logits.value().size(); ++i)
      if (std::isnan(logits.value().data()[i]))
        throw TrainingError("loss: NaN logit at flat index " + std::to_string(i));
    throw TrainingError("loss: non-finite logits");
  }
  const bool binary = logits.cols() == 1;
  const std::size_t num_classes = binary ? 2 : static_cast<std::size_t>(logits.cols());
  if (binary && spec.kind == LossKind::cross_entropy)
    throw ConfigError("loss: cross_entropy needs one logit per class; use bce for a single logit");
  if (!binary && spec.kind == LossKind::bce)
    throw ConfigError("loss: bce needs a single logit column");
  spec.validate(num_classes);
  if (targets.rows() != static_cast<std::size_t>(logits.rows()))
    throw ad::ShapeError("loss: " + std::to_string(targets.rows()) + " targets for " +
                         std::to_string(logits.rows()) + " rows");

  MatrixD t = targets.to_matrix(num_classes);
  if (spec.class_weights) {
    for (std::size_t c = 0; c < num_classes; ++c)
      t.col(static_cast<Eigen::Index>(c)) *= (*spec.class_weights)[c];
  }
  const double gamma = spec.kind == LossKind::focal ? spec.focal_gamma : 0.0;
  const double inv_n = 1.0 / static_cast<double>(logits.rows());

  if (binary) {
    // log p1 = -softplus(-z), log p0 = -softplus(z); (1 - p1)^g = exp(-g softplus(z)).
    const Tensor sp_pos = ad::softplus(logits);
    const Tensor sp_neg = ad::softplus(ad::neg(logits));
    Tensor term1 = ad::mul(ad::constant(MatrixD(t.col(1))), sp_neg);
    Tensor term0 = ad::mul(ad::constant(MatrixD(t.col(0))), sp_pos);
    if (gamma > 0.0) {
      term1 = ad::mul(term1, ad::exp(ad::scale(sp_pos, -gamma)));
      term0 = ad::mul(term0, ad::exp(ad::scale(sp_neg, -gamma)));
    }
    return ad::scale(ad::sum(ad::add(term1, term0)), inv_n);
  }

  const Tensor log_p = ad::log_softmax(logits);
  Tensor per_class = ad::mul(ad::constant(t), log_p);
  if (gamma > 0.0) {
    const Tensor one_minus_p = ad::add_scalar(ad::neg(ad::exp(log_p)), 1.0);
    per_class = ad::mul(per_class, ad::pow(one_minus_p, gamma));
  }
  return ad::scale(ad::sum(per_class), -inv_n);
}

}  // namespace metabalance::nn

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "metabalance/errors.hpp"

namespace metabalance::ad {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raised when operand shapes are incompatible for an operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using metabalance::ConfigError;

/// Raised when differentiation is requested on something that cannot be
/// differentiated (non-scalar output, detached tensor).
class GradientError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/**
 * Per-thread operation recorder.
 *
 * Every differentiable node receives a sequence number from the tape of the
 * thread that created it. Inputs are always created before the op consuming
 * them, so ordering nodes by sequence number is a topological order of the
 * graph; the backward pass replays nodes in decreasing sequence order.
 *
 * Recording can be suspended with NoGradGuard. Tapes are never shared
 * between threads.
 */
class Tape {
 public:
  static Tape& current() {
    thread_local Tape tape;
    return tape;
  }

  bool active() const { return active_; }
  void set_active(bool active) { active_ = active; }
  std::uint64_t next_id() { return next_id_++; }
  std::uint64_t recorded() const { return next_id_; }

 private:
  bool active_ = true;
  std::uint64_t next_id_ = 0;
};

/// Sets tape recording to `enabled` for the lifetime of the guard.
class GradModeGuard {
 public:
  explicit GradModeGuard(bool enabled) : previous_(Tape::current().active()) {
    Tape::current().set_active(enabled);
  }
  ~GradModeGuard() { Tape::current().set_active(previous_); }
  GradModeGuard(const GradModeGuard&) = delete;
  GradModeGuard& operator=(const GradModeGuard&) = delete;

 private:
  bool previous_;
};

class NoGradGuard : public GradModeGuard {
 public:
  NoGradGuard() : GradModeGuard(false) {}
};

template <typename T>
class BasicTensor;

template <typename T>
struct Node {
  using Tensor = BasicTensor<T>;
  using BackwardFn =
      std::function<std::vector<Tensor>(const Tensor& self, const Tensor& grad_out)>;

  Matrix<T> value;
  bool requires_grad = false;
  std::uint64_t id = 0;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Maps the gradient of this node's output to one gradient per input.
  // Entries may be undefined tensors for inputs that receive no gradient.
  BackwardFn backward;
  Matrix<T> grad;
  bool has_grad = false;
};

/**
 * Differentiable two-dimensional array with value semantics on a shared
 * graph node. Scalars are 1x1; vectors are 1xN or Nx1.
 */
template <typename T>
class BasicTensor {
 public:
  using Scalar = T;
  using NodeT = Node<T>;

  BasicTensor() = default;

  explicit BasicTensor(Matrix<T> value, bool requires_grad = false)
      : node_(std::make_shared<NodeT>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
    node_->id = Tape::current().next_id();
  }

  static BasicTensor scalar(T v) {
    Matrix<T> m(1, 1);
    m(0, 0) = v;
    return BasicTensor(std::move(m));
  }

  static BasicTensor zeros(Eigen::Index rows, Eigen::Index cols) {
    return BasicTensor(Matrix<T>::Zero(rows, cols));
  }

  static BasicTensor parameter(Matrix<T> value) {
    return BasicTensor(std::move(value), true);
  }

  /// Builds an op result. The node is recorded only when the tape is active
  /// and at least one input requires grad.
  static BasicTensor make_result(Matrix<T> value, std::vector<BasicTensor> inputs,
                                 typename NodeT::BackwardFn backward, const char* op) {
    BasicTensor out(std::move(value));
    out.node_->op = op;
    if (!Tape::current().active()) return out;
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (!any) return out;
    out.node_->requires_grad = true;
    out.node_->inputs.reserve(inputs.size());
    for (auto& in : inputs) out.node_->inputs.push_back(in.node_);
    out.node_->backward = std::move(backward);
    return out;
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Matrix<T>& value() const { return node_->value; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  Eigen::Index numel() const { return node_->value.size(); }
  std::vector<std::size_t> shape() const {
    return {static_cast<std::size_t>(rows()), static_cast<std::size_t>(cols())};
  }
  T item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_string());
    return node_->value(0, 0);
  }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool is_leaf() const { return node_ && node_->inputs.empty(); }
  const char* op() const { return node_->op; }
  std::uint64_t id() const { return node_->id; }

  /// Accumulated gradient of a leaf after backward(); empty when none.
  bool has_grad() const { return node_->has_grad; }
  const Matrix<T>& grad() const { return node_->grad; }
  void zero_grad() {
    node_->grad.resize(0, 0);
    node_->has_grad = false;
  }

  /// Same values, no history.
  BasicTensor detach() const { return BasicTensor(node_->value); }

  /// Overwrites the value of a leaf in place (used by optimizers).
  void assign(const Matrix<T>& v) {
    if (!is_leaf()) throw GradientError("assign() is only valid on leaf tensors");
    if (v.rows() != rows() || v.cols() != cols())
      throw ShapeError("assign() shape mismatch: " + shape_string() + " vs " +
                       std::to_string(v.rows()) + "x" + std::to_string(v.cols()));
    node_->value = v;
  }

  std::string shape_string() const {
    if (!node_) return "<undefined>";
    return std::to_string(rows()) + "x" + std::to_string(cols());
  }

  const std::shared_ptr<NodeT>& node() const { return node_; }
  explicit BasicTensor(std::shared_ptr<NodeT> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<NodeT> node_;
};

using Tensor = BasicTensor<double>;
using Tensor32 = BasicTensor<float>;
using MatrixD = Matrix<double>;

}  // namespace metabalance::ad

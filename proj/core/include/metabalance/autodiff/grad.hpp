#pragma once

#include <algorithm>
#include <span>
#include <unordered_map>
#include <vector>

#include "metabalance/autodiff/ops.hpp"

namespace metabalance::ad {

namespace detail {

template <typename T>
std::vector<std::shared_ptr<Node<T>>> reachable_in_replay_order(const BasicTensor<T>& root) {
  std::vector<std::shared_ptr<Node<T>>> order;
  std::vector<std::shared_ptr<Node<T>>> stack{root.node()};
  std::unordered_map<const Node<T>*, bool> seen{{root.node().get(), true}};
  while (!stack.empty()) {
    auto n = std::move(stack.back());
    stack.pop_back();
    for (const auto& in : n->inputs) {
      if (!in->requires_grad) continue;
      if (seen.emplace(in.get(), true).second) stack.push_back(in);
    }
    order.push_back(std::move(n));
  }
  // Inputs always carry smaller sequence numbers than their consumers.
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a->id > b->id; });
  return order;
}

template <typename T>
std::unordered_map<Node<T>*, BasicTensor<T>> propagate(const BasicTensor<T>& loss,
                                                        bool create_graph) {
  if (!loss.defined()) throw GradientError("backward: undefined tensor");
  if (loss.numel() != 1)
    throw GradientError("backward: loss must be a scalar, got shape " + loss.shape_string());
  if (!loss.requires_grad())
    throw GradientError("backward: tensor is detached from the tape (requires_grad=false)");

  GradModeGuard mode(create_graph);
  std::unordered_map<Node<T>*, BasicTensor<T>> grads;
  grads.emplace(loss.node().get(), BasicTensor<T>::scalar(T(1)));

  for (const auto& n : reachable_in_replay_order(loss)) {
    auto it = grads.find(n.get());
    if (it == grads.end() || n->inputs.empty()) continue;
    const BasicTensor<T> self(n);
    auto input_grads = n->backward(self, it->second);
    for (std::size_t i = 0; i < n->inputs.size(); ++i) {
      Node<T>* in = n->inputs[i].get();
      if (!in->requires_grad || i >= input_grads.size() || !input_grads[i].defined()) continue;
      auto [slot, inserted] = grads.try_emplace(in, input_grads[i]);
      if (!inserted) slot->second = add(slot->second, input_grads[i]);
    }
  }
  return grads;
}

}  // namespace detail

/**
 * Gradients of a scalar `loss` with respect to each of `inputs`.
 *
 * With create_graph=true the gradient computation is itself recorded, so the
 * returned tensors can be differentiated again (Hessian-vector products,
 * meta-gradients through an inner update). Inputs that do not influence the
 * loss receive zero gradients.
 */
template <typename T>
std::vector<BasicTensor<T>> grad(const BasicTensor<T>& loss,
                                 std::span<const BasicTensor<T>> inputs,
                                 bool create_graph = false) {
  auto grads = detail::propagate(loss, create_graph);
  std::vector<BasicTensor<T>> out;
  out.reserve(inputs.size());
  for (const auto& in : inputs) {
    auto it = grads.find(in.node().get());
    if (it == grads.end() || !in.requires_grad())
      out.push_back(BasicTensor<T>::zeros(in.rows(), in.cols()));
    else
      out.push_back(it->second);
  }
  return out;
}

template <typename T>
std::vector<BasicTensor<T>> grad(const BasicTensor<T>& loss,
                                 const std::vector<BasicTensor<T>>& inputs,
                                 bool create_graph = false) {
  return grad(loss, std::span<const BasicTensor<T>>(inputs), create_graph);
}

/// Accumulates d(loss)/d(leaf) into the grad() buffer of every leaf that
/// requires grad and is reachable from `loss`.
template <typename T>
void backward(const BasicTensor<T>& loss, bool create_graph = false) {
  auto grads = detail::propagate(loss, create_graph);
  for (auto& [node, g] : grads) {
    if (!node->inputs.empty() || !node->requires_grad) continue;
    if (node->has_grad)
      node->grad += g.value();
    else
      node->grad = g.value();
    node->has_grad = true;
  }
}

}  // namespace metabalance::ad

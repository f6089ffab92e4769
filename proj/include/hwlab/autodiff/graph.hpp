#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "hwlab/autodiff/tensor.hpp"

namespace hwlab::ad {

template <class T>
struct Node;

/// Shared handle to a node of the computation graph. Leaves are created with
/// `parameter` (gradient tracked) or `constant`; every op returns a new Var
/// whose parents are its inputs.
template <class T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  explicit operator bool() const { return static_cast<bool>(node_); }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

  /// Accumulated gradient; all zeros if nothing has flowed in yet.
  const Tensor<T>& grad() const;
  void zero_grad();

  Node<T>* get() const { return node_.get(); }

 private:
  std::shared_ptr<Node<T>> node_;
};

template <class T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<Var<T>> parents;
  /// Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  Tensor<T>& grad_buffer() {
    if (grad.shape() != value.shape()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

template <class T>
const Tensor<T>& Var<T>::grad() const {
  return node_->grad_buffer();
}

template <class T>
void Var<T>::zero_grad() {
  node_->grad_buffer().fill(T(0));
}

template <class T>
Var<T> parameter(Tensor<T> value) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var<T>(std::move(node));
}

template <class T>
Var<T> constant(Tensor<T> value) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  return Var<T>(std::move(node));
}

/// Creates an op result. If no parent tracks gradients the node is detached
/// and `backward` is dropped.
template <class T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> parents, std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->is_leaf = false;
  bool track = false;
  for (const auto& p : parents) track = track || (p && p.requires_grad());
  if (track) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Var<T>(std::move(node));
}

/// Reverse-mode sweep from a single-element loss. Interior gradients are
/// reset first; leaf gradients accumulate across calls.
template <class T>
void backward(const Var<T>& loss);

/// Nodes reachable from `root` through gradient-tracking edges, in
/// topological order (parents before children).
template <class T>
std::vector<Node<T>*> topological_order(const Var<T>& root);

}  // namespace hwlab::ad

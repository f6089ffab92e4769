#include <unordered_set>

#include "hwlab/autodiff/graph.hpp"

namespace hwlab::ad {

template <class T>
std::vector<Node<T>*> topological_order(const Var<T>& root) {
  std::vector<Node<T>*> order;
  if (!root || !root.requires_grad()) return order;
  std::unordered_set<Node<T>*> visited;
  // Iterative post-order DFS: (node, index of next parent to visit).
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* parent = node->parents[next++].get();
      if (parent && parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

template <class T>
void backward(const Var<T>& loss) {
  if (!loss) throw std::invalid_argument("backward on an empty Var");
  if (loss.value().numel() != 1) throw ShapeError("backward needs a single-element loss, got " + to_string(loss.shape()));
  const auto order = topological_order(loss);
  if (order.empty()) return;
  for (Node<T>* node : order)
    if (!node->is_leaf) node->grad_buffer().fill(T(0));
  loss.get()->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (!node->is_leaf && node->backward) node->backward(*node);
  }
}

template std::vector<Node<float>*> topological_order<float>(const Var<float>&);
template std::vector<Node<double>*> topological_order<double>(const Var<double>&);
template void backward<float>(const Var<float>&);
template void backward<double>(const Var<double>&);

}  // namespace hwlab::ad

#pragma once

#include <functional>
#include <vector>

#include "mad/tensor.hpp"

namespace mad {

using VarId = int;

// Reverse-mode tape over Tensor-valued nodes. A graph is built per batch:
// run ops forward, call backward(loss) once, read leaf gradients, discard.
//
// Gradient conventions at non-differentiable points: relu passes zero at the
// kink, selu takes the negative branch at zero, row_max routes to the lowest
// tied index. These match the closed-form subgradients in quasimetric.hpp.
class Graph {
 public:
  VarId leaf(Tensor value, bool requires_grad);
  VarId constant(Tensor value) { return leaf(std::move(value), false); }

  VarId matmul(VarId a, VarId b);
  // bias is 1 x n, added to every row of a.
  VarId add_row_bias(VarId a, VarId bias);
  VarId selu(VarId a);
  VarId relu(VarId a);
  VarId add(VarId a, VarId b);
  VarId sub(VarId a, VarId b);
  // scale * a + shift, elementwise scalars.
  VarId affine(VarId a, double scale, double shift);
  // a + c / a * c with a constant tensor of identical shape.
  VarId add_const(VarId a, const Tensor& c);
  VarId mul_const(VarId a, const Tensor& c);
  VarId gather_rows(VarId a, std::vector<int> index);
  // Row reductions: B x d -> B x 1.
  VarId row_max(VarId a);
  VarId row_sum(VarId a);
  VarId row_mean(VarId a);
  VarId square(VarId a);
  // Mean over all elements -> 1 x 1.
  VarId mean_all(VarId a);

  const Tensor& value(VarId id) const { return nodes_[static_cast<size_t>(id)].value; }
  double scalar(VarId id) const;
  // Valid after backward(); zero tensor for nodes the loss does not reach.
  const Tensor& grad(VarId id) const;
  bool requires_grad(VarId id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }

  // Seeds d(loss)/d(loss) = 1 and propagates through the tape in reverse
  // creation order. May be called once per graph.
  void backward(VarId loss);

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    // Reads this node's grad and accumulates into parents' grads.
    std::function<void(Graph&, const Tensor&)> backprop;
  };

  Node& node(VarId id) { return nodes_[static_cast<size_t>(id)]; }
  const Node& node(VarId id) const { return nodes_[static_cast<size_t>(id)]; }
  Tensor& grad_ref(VarId id);
  VarId push(Tensor value, bool requires_grad, std::function<void(Graph&, const Tensor&)> backprop);
  VarId binary_elementwise(VarId a, VarId b, double sign_b);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace mad

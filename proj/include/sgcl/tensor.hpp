#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sgcl/common.hpp"

namespace sgcl {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (const auto d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

namespace detail {

struct Node;

// Receives the upstream gradient for this node and a getter that hands out
// the (zero-initialized) gradient buffer of input i to accumulate into.
using BackwardFn = std::function<void(const Node& self, const std::vector<double>& gout,
                                      const std::function<std::vector<double>&(std::size_t)>& gin)>;

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // populated only on leaves with requires_grad
  bool requires_grad = false;
  bool is_leaf = true;
  std::string op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;
};

}  // namespace detail

// Reverse-mode autodiff value. A Tensor is a cheap handle onto a graph node;
// the graph is the set of nodes reachable through `inputs` links, implicitly
// in topological (creation) order. Leaves created with requires_grad
// accumulate into `grad()` on every backward() until zero_grad().
class Tensor {
 public:
  Tensor() = default;

  static Tensor leaf(Shape shape, std::vector<double> data, bool requires_grad = false) {
    if (static_cast<std::int64_t>(data.size()) != shape_numel(shape))
      throw dimension_error("tensor leaf: data size " + std::to_string(data.size()) +
                            " does not match shape " + shape_str(shape));
    auto n = std::make_shared<detail::Node>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  static Tensor scalar(double v) { return leaf({}, {v}); }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<double> d(static_cast<std::size_t>(shape_numel(shape)), 0.0);
    return leaf(std::move(shape), std::move(d), requires_grad);
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t numel() const { return static_cast<std::int64_t>(node_->data.size()); }
  std::int64_t rows() const { return node_->shape.size() >= 1 ? node_->shape[0] : 1; }
  std::int64_t cols() const { return node_->shape.size() >= 2 ? node_->shape[1] : 1; }
  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->is_leaf; }
  const std::string& op() const { return node_->op; }

  const std::vector<double>& data() const { return node_->data; }
  // In-place mutation of leaf values (optimizer / EMA updates). Graphs built
  // before the mutation are stale and must not be backward()ed afterwards.
  std::vector<double>& mutable_data() {
    if (!node_->is_leaf) throw precondition_error("mutable_data: only leaves may be mutated");
    return node_->data;
  }

  double item() const {
    if (numel() != 1) throw dimension_error("item: tensor is not scalar, shape " + shape_str(shape()));
    return node_->data[0];
  }

  bool has_grad() const { return !node_->grad.empty(); }
  const std::vector<double>& grad() const {
    if (node_->grad.empty())
      throw precondition_error("grad: no gradient accumulated (op=" + node_->op + ")");
    return node_->grad;
  }
  void zero_grad() { node_->grad.clear(); }

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

  // Value copy that blocks gradient flow.
  Tensor detach() const {
    auto n = std::make_shared<detail::Node>();
    n->shape = node_->shape;
    n->data = node_->data;
    n->requires_grad = false;
    return Tensor(std::move(n));
  }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;

  friend Tensor make_op(const std::string&, std::vector<Tensor>, Shape, std::vector<double>,
                        detail::BackwardFn);
};

// Extension point shared by ops.hpp and the fused loss kernels: records one
// operation node. Throws numeric_error if the result contains NaN/Inf.
inline Tensor make_op(const std::string& name, std::vector<Tensor> inputs, Shape shape,
                      std::vector<double> data, detail::BackwardFn backward) {
  if (static_cast<std::int64_t>(data.size()) != shape_numel(shape))
    throw dimension_error("op " + name + ": output size mismatch");
  for (const double v : data)
    if (!std::isfinite(v)) throw numeric_error("op " + name + ": non-finite output");
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->is_leaf = false;
  n->op = name;
  n->backward = std::move(backward);
  n->inputs.reserve(inputs.size());
  bool rg = false;
  for (const auto& t : inputs) {
    rg = rg || t.requires_grad();
    n->inputs.push_back(t.node_ptr());
  }
  n->requires_grad = rg;
  return Tensor(std::move(n));
}

// Accumulates d(loss)/d(leaf) into every reachable requires_grad leaf.
// Traversal is reverse topological order of the subgraph that requires
// gradients; repeated calls without zero_grad() add up.
inline void backward(const Tensor& loss) {
  if (loss.numel() != 1)
    throw dimension_error("backward: loss must be scalar, shape " + shape_str(loss.shape()));
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS over grad-requiring nodes; reverse gives the
  // consumer-before-producer order backward needs.
  std::vector<detail::Node*> order;
  {
    std::unordered_set<detail::Node*> visited;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(loss.node(), 0);
    visited.insert(loss.node());
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->inputs.size()) {
        detail::Node* in = node->inputs[next++].get();
        if (in->requires_grad && !visited.count(in)) {
          visited.insert(in);
          stack.emplace_back(in, 0);
        }
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }

  std::unordered_map<detail::Node*, std::vector<double>> flow;
  flow[loss.node()] = {1.0};

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    const auto fit = flow.find(node);
    if (fit == flow.end()) continue;
    const std::vector<double>& g = fit->second;
    if (node->is_leaf) {
      if (node->requires_grad) {
        if (node->grad.empty()) node->grad.assign(node->data.size(), 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) node->grad[i] += g[i];
      }
      continue;
    }
    auto gin = [&flow, node](std::size_t i) -> std::vector<double>& {
      detail::Node* in = node->inputs[i].get();
      auto& buf = flow[in];
      if (buf.empty()) buf.assign(in->data.size(), 0.0);
      return buf;
    };
    node->backward(*node, g, gin);
  }
}

}  // namespace sgcl

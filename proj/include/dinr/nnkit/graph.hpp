#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string_view>
#include <vector>

#include "dinr/nnkit/param_set.hpp"
#include "dinr/nnkit/tensor.hpp"

namespace dinr::nn {

class Graph;

// Handle to a node in a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  // Gradient accumulated by the last backward pass (zeros if untouched).
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  Graph& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* g, std::size_t id) : graph_(g), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Tape of operations recorded in execution order. backward() walks the tape
// in exact reverse, so node order is a topological order by construction.
//
// A graph is single-use: after backward() it must be discarded and a new
// forward pass recorded. Not thread-safe.
class Graph {
 public:
  // Called during backward with the graph and the node's own id.
  using BackwardFn = std::function<void(Graph&, std::size_t)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  // Leaf that records its gradient (used for input-gradient checks).
  Var leaf(Tensor value);
  // Leaf bound to a slice of `params`; backward adds into params.grads().
  // `params` must outlive the backward pass.
  Var parameter(ParamSet& params, std::string_view name);

  // Registers an op output. `backward` may be empty when no input needs grad.
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

  void backward(Var loss);

  bool requires_grad(Var v) const { return nodes_.at(v.id_).requires_grad; }
  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  const Tensor& grad(std::size_t id) const;
  // Gradient buffer of a node, allocated on first use.
  Tensor& grad_mut(std::size_t id);

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
    ParamSet* params = nullptr;
    std::size_t param_offset = 0;
  };

  Var push(Node node);

  std::deque<Node> nodes_;  // deque: values stay put while recording
  bool consumed_ = false;
};

}  // namespace dinr::nn

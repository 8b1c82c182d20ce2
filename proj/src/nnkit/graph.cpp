#include "dinr/nnkit/graph.hpp"

#include <fmt/format.h>

#include "dinr/errors.hpp"

namespace dinr::nn {

const Tensor& Var::value() const { return graph_->value(id_); }
const Tensor& Var::grad() const { return graph_->grad(id_); }

Var Graph::push(Node node) {
  if (consumed_) {
    throw GraphError("cannot record into a graph after backward(); start a new forward pass");
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::leaf(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Graph::parameter(ParamSet& params, std::string_view name) {
  const auto& e = params.entry(name);
  const auto vals = params.values(name);
  Node n;
  n.value = Tensor(e.shape, std::vector<double>(vals.begin(), vals.end()));
  n.requires_grad = true;
  n.params = &params;
  n.param_offset = e.offset;
  return push(std::move(n));
}

Var Graph::record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (const auto& in : inputs) {
    if (in.graph_ != this) throw GraphError("op input belongs to a different graph");
    n.requires_grad = n.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const Tensor& Graph::grad(std::size_t id) const {
  const auto& n = nodes_.at(id);
  if (n.grad.empty() && !n.value.empty()) {
    // Untouched node: expose zeros without mutating.
    static thread_local Tensor zeros;
    zeros = Tensor(n.value.shape(), 0.0);
    return zeros;
  }
  return n.grad;
}

Tensor& Graph::grad_mut(std::size_t id) {
  auto& n = nodes_.at(id);
  if (n.grad.shape() != n.value.shape() || n.grad.size() != n.value.size()) {
    n.grad = Tensor(n.value.shape(), 0.0);
  }
  return n.grad;
}

void Graph::backward(Var loss) {
  if (consumed_) {
    throw GraphError("backward() already ran on this graph; record a fresh forward pass");
  }
  if (loss.graph_ != this) throw GraphError("loss belongs to a different graph");
  const auto& lv = nodes_.at(loss.id_).value;
  if (lv.size() != 1) {
    throw GraphError(fmt::format("backward() needs a scalar loss, got shape {}", shape_string(lv.shape())));
  }
  consumed_ = true;
  if (!nodes_[loss.id_].requires_grad) return;

  grad_mut(loss.id_)[0] = 1.0;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.params != nullptr) {
      auto& g = n.params->grads();
      for (std::size_t k = 0; k < n.grad.size(); ++k) g[n.param_offset + k] += n.grad[k];
    }
  }
}

}  // namespace dinr::nn

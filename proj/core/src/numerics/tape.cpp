#include "mdr/numerics/tape.hpp"

#include <algorithm>
#include <cmath>

#include "mdr/error.hpp"

namespace mdr {

const Tensor& Var::value() const { return tape_->value(id_); }

const Tensor& BackwardContext::grad() const { return tape_.nodes_[self_].grad; }

const Tensor& BackwardContext::value() const {
  return tape_.nodes_[self_].value;
}

const Tensor& BackwardContext::input(std::size_t k) const {
  return tape_.nodes_[tape_.nodes_[self_].inputs.at(k)].value;
}

Tensor* BackwardContext::input_grad(std::size_t k) {
  const std::size_t id = tape_.nodes_[self_].inputs.at(k);
  if (!tape_.nodes_[id].requires_grad) return nullptr;
  return &tape_.grad_accumulator(id);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, false, "constant"});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, true, "variable"});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs,
                 Backward backward, std::string_view op) {
  Node node;
  node.value = std::move(value);
  node.op = op;
  node.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (v.tape_ != this) {
      throw UsageError("op '" + std::string(op) + "' mixes nodes from different tapes");
    }
    node.inputs.push_back(v.id_);
    node.requires_grad = node.requires_grad || nodes_[v.id_].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_accumulator(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.shape() != node.value.shape() || node.grad.empty()) {
    node.grad = Tensor::zeros_like(node.value);
  }
  return node.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw UsageError("backward on a foreign node");
  if (nodes_.empty()) throw UsageError("backward on an empty tape");
  if (value(loss.id_).size() != 1) {
    throw UsageError("backward needs a scalar loss, got shape " +
                     shape_string(value(loss.id_).shape()));
  }
  for (Node& node : nodes_) node.grad = Tensor();
  order_.clear();
  if (!nodes_[loss.id_].requires_grad) return;

  grad_accumulator(loss.id_).fill(1.0);
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty()) continue;
    order_.push_back(i);
    if (node.backward) {
      BackwardContext ctx(*this, i);
      node.backward(ctx);
    }
  }
}

Tensor Tape::grad(Var v) const {
  const Node& node = nodes_.at(v.id());
  if (node.grad.empty() && !node.value.empty()) {
    return Tensor::zeros_like(node.value);
  }
  return node.grad;
}

void Tape::note_kink(double distance) {
  min_kink_ = std::min(min_kink_, std::abs(distance));
}

}  // namespace mdr

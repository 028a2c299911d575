#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "mdr/numerics/tensor.hpp"

namespace mdr {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// What a node's backward function sees: its own output gradient, its
/// inputs' values, and accumulators for the inputs that require gradients.
class BackwardContext {
 public:
  BackwardContext(Tape& tape, std::size_t self) : tape_(tape), self_(self) {}

  const Tensor& grad() const;
  const Tensor& value() const;
  const Tensor& input(std::size_t k) const;
  /// Null when input k does not require a gradient.
  Tensor* input_grad(std::size_t k);

 private:
  Tape& tape_;
  std::size_t self_;
};

/// Define-by-run reverse-mode tape. Nodes are appended in creation order,
/// which is a topological order, so backward simply walks ids downward.
class Tape {
 public:
  using Backward = std::function<void(BackwardContext&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);

  /// Appends an op node. The backward function is dropped when no input
  /// requires a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward,
             std::string_view op);

  /// Seeds d(loss)/d(loss) = 1 and propagates. Gradients from any previous
  /// backward on this tape are cleared first.
  void backward(Var loss);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  /// Gradient of a node after backward; zeros when nothing reached it.
  Tensor grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id()).requires_grad; }
  std::string_view op(Var v) const { return op(v.id()); }
  std::string_view op(std::size_t id) const { return nodes_.at(id).op; }

  std::size_t size() const { return nodes_.size(); }
  std::span<const std::size_t> last_backward_order() const { return order_; }

  /// Nondifferentiable ops report how close their inputs sat to a kink.
  /// Gradient checks use this to reject points near a kink.
  void note_kink(double distance);
  double min_kink_distance() const { return min_kink_; }

 private:
  friend class BackwardContext;

  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    Backward backward;
    bool requires_grad = false;
    std::string_view op;
  };

  Tensor& grad_accumulator(std::size_t id);

  std::vector<Node> nodes_;
  std::vector<std::size_t> order_;
  double min_kink_ = std::numeric_limits<double>::infinity();
};

}  // namespace mdr

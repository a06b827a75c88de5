#pragma once

#include <functional>
#include <vector>

#include "inret/tensor/tensor.hpp"

namespace inret {

template <typename Scalar>
class Tape;

/// Handle to a value recorded on a tape.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Tape<Scalar>* tape, int id) : tape_(tape), id_(id) {}

  Tape<Scalar>& tape() const { return *tape_; }
  int id() const { return id_; }
  const Tensor<Scalar>& value() const { return tape_->value(id_); }
  const Shape& shape() const { return value().shape(); }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape<Scalar>* tape_ = nullptr;
  int id_ = -1;
};

/// Linear record of executed operations for reverse-mode differentiation.
///
/// Nodes are appended in execution order, so the record is topologically
/// sorted by construction and backward() is a single reverse sweep. A tape
/// supports exactly one backward pass. A tape constructed with
/// `record = false` stores values only and is used for pure evaluation.
template <typename Scalar>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor<Scalar>& out_grad)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  /// Leaf holding a copy of `value`; gradients are kept on the tape.
  Var<Scalar> input(Tensor<Scalar> value, bool requires_grad = false);

  /// Leaf referencing `param.value`; backward() accumulates into `param.grad`.
  /// The parameter must outlive the tape and stay unmodified until backward().
  Var<Scalar> parameter(Parameter<Scalar>& param);

  /// Leaf referencing an external tensor without gradient.
  Var<Scalar> constant_ref(const Tensor<Scalar>& value);

  Var<Scalar> record(Tensor<Scalar> value, const std::vector<Var<Scalar>>& parents, BackwardFn backward);

  void backward(const Var<Scalar>& output);

  const Tensor<Scalar>& value(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.external ? *n.external : n.value;
  }
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

  /// Gradient accumulator for node `id`, zero-initialized on first access.
  Tensor<Scalar>& grad_buffer(int id);

  /// Gradient of an input leaf after backward(); empty tensor if none flowed.
  const Tensor<Scalar>& grad(const Var<Scalar>& v) const;

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Node {
    Tensor<Scalar> value;
    const Tensor<Scalar>* external = nullptr;
    Tensor<Scalar>* sink = nullptr;
    Tensor<Scalar> grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  bool record_;
  bool consumed_ = false;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace inret

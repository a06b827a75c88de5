#include "inret/tensor/tape.hpp"

#include <numeric>
#include <sstream>

namespace inret {

Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "x" : "") << shape[i];
  out << ']';
  return out.str();
}

void require_shape(const Shape& actual, const Shape& expected, const char* what) {
  if (actual != expected) {
    throw ShapeError(std::string(what) + ": expected shape " + shape_string(expected) + ", got " +
                     shape_string(actual));
  }
}

template <typename Scalar>
Var<Scalar> Tape<Scalar>::input(Tensor<Scalar> value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = record_ && requires_grad;
  nodes_.push_back(std::move(n));
  return Var<Scalar>(this, static_cast<int>(nodes_.size() - 1));
}

template <typename Scalar>
Var<Scalar> Tape<Scalar>::parameter(Parameter<Scalar>& param) {
  Node n;
  n.external = &param.value;
  if (record_) {
    n.sink = &param.grad;
    n.requires_grad = true;
  }
  nodes_.push_back(std::move(n));
  return Var<Scalar>(this, static_cast<int>(nodes_.size() - 1));
}

template <typename Scalar>
Var<Scalar> Tape<Scalar>::constant_ref(const Tensor<Scalar>& value) {
  Node n;
  n.external = &value;
  nodes_.push_back(std::move(n));
  return Var<Scalar>(this, static_cast<int>(nodes_.size() - 1));
}

template <typename Scalar>
Var<Scalar> Tape<Scalar>::record(Tensor<Scalar> value, const std::vector<Var<Scalar>>& parents,
                                 BackwardFn backward) {
  if (consumed_) throw StateError("cannot record on a tape after backward()");
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const auto& p : parents) {
      if (&p.tape() != this) throw ContractError("operation mixes values from different tapes");
      n.requires_grad = n.requires_grad || needs_grad(p.id());
    }
    if (n.requires_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var<Scalar>(this, static_cast<int>(nodes_.size() - 1));
}

template <typename Scalar>
Tensor<Scalar>& Tape<Scalar>::grad_buffer(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.sink) {
    const Tensor<Scalar>& v = value(id);
    if (n.sink->shape() != v.shape()) *n.sink = Tensor<Scalar>::zeros(v.shape());
    n.has_grad = true;
    return *n.sink;
  }
  if (!n.has_grad) {
    n.grad = Tensor<Scalar>::zeros(value(id).shape());
    n.has_grad = true;
  }
  return n.grad;
}

template <typename Scalar>
const Tensor<Scalar>& Tape<Scalar>::grad(const Var<Scalar>& v) const {
  static const Tensor<Scalar> empty;
  const Node& n = nodes_[static_cast<std::size_t>(v.id())];
  if (n.sink) return *n.sink;
  return n.has_grad ? n.grad : empty;
}

template <typename Scalar>
void Tape<Scalar>::backward(const Var<Scalar>& output) {
  if (&output.tape() != this) throw ContractError("backward output was not produced on this tape");
  if (consumed_) throw StateError("tape already consumed by a previous backward()");
  if (output.value().size() != 1) {
    throw ContractError("backward requires a single-element output, got shape " +
                        shape_string(output.value().shape()));
  }
  if (!record_) throw StateError("backward on a non-recording tape");
  consumed_ = true;
  if (!needs_grad(output.id())) return;
  grad_buffer(output.id()).data().setOnes();
  for (int id = output.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.has_grad || !n.backward || n.sink) continue;
    n.backward(*this, n.grad);
    // Intermediate gradients are not needed once propagated.
    n.grad = Tensor<Scalar>();
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace inret

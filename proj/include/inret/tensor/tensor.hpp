#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "inret/errors.hpp"

namespace inret {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RowMatrixXf = RowMatrix<float>;
using RowMatrixXd = RowMatrix<double>;
using IndexMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Index shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major tensor. Storage is a contiguous Eigen vector; `matrix()`
/// views the tensor as dim(0) x (product of the remaining dims).
template <typename Scalar>
class Tensor {
 public:
  using VectorType = Vector<Scalar>;
  using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(VectorType::Zero(shape_size(shape_))) {}
  Tensor(Shape shape, VectorType data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                       shape_string(shape_));
    }
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor constant(Shape shape, Scalar value) {
    Tensor t(std::move(shape));
    t.data_.setConstant(value);
    return t;
  }
  template <typename Derived>
  static Tensor from_matrix(const Eigen::MatrixBase<Derived>& m) {
    Tensor t(Shape{m.rows(), m.cols()});
    t.matrix() = m.template cast<Scalar>();
    return t;
  }
  template <typename Derived>
  static Tensor from_vector(const Eigen::MatrixBase<Derived>& v) {
    return Tensor(Shape{v.size()}, v.template cast<Scalar>());
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  VectorType& data() { return data_; }
  const VectorType& data() const { return data_; }
  Scalar* ptr() { return data_.data(); }
  const Scalar* ptr() const { return data_.data(); }
  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  Index rows() const { return shape_.empty() ? 1 : shape_[0]; }
  Index cols() const {
    Index c = 1;
    for (std::size_t i = 1; i < shape_.size(); ++i) c *= shape_[i];
    return c;
  }
  MatrixMap matrix() { return MatrixMap(data_.data(), rows(), cols()); }
  ConstMatrixMap matrix() const { return ConstMatrixMap(data_.data(), rows(), cols()); }

  Tensor reshaped(Shape shape) const {
    if (shape_size(shape) != size()) {
      throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  bool all_finite() const { return data_.allFinite(); }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

  bool operator==(const Tensor& other) const { return shape_ == other.shape_ && data_ == other.data_; }

 private:
  Shape shape_{0};
  VectorType data_;
};

/// A learnable tensor together with its gradient accumulator.
template <typename Scalar>
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor<Scalar> value)
      : name(std::move(name)), value(std::move(value)), grad(Tensor<Scalar>::zeros(this->value.shape())) {}

  void zero_grad() {
    if (grad.shape() != value.shape()) grad = Tensor<Scalar>::zeros(value.shape());
    else grad.data().setZero();
  }

  std::string name;
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
};

void require_shape(const Shape& actual, const Shape& expected, const char* what);

}  // namespace inret

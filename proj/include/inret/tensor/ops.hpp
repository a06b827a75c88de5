#pragma once

#include <vector>

#include "inret/tensor/tape.hpp"

namespace inret {

/// Running statistics for batch normalization over the rows of an N x C input.
template <typename Scalar>
struct BatchNormStats {
  BatchNormStats() = default;
  explicit BatchNormStats(Index channels)
      : running_mean(Tensor<Scalar>::zeros({channels})), running_var(Tensor<Scalar>::constant({channels}, 1)) {}

  Tensor<Scalar> running_mean;
  Tensor<Scalar> running_var;
  Scalar momentum = Scalar(0.1);
  Scalar eps = Scalar(1e-5);
};

// Dense layers. `input` is B x I, `weight` is I x O, `bias` has O entries.
template <typename Scalar>
Var<Scalar> linear(const Var<Scalar>& input, const Var<Scalar>& weight, const Var<Scalar>& bias);
template <typename Scalar>
Var<Scalar> linear(const Var<Scalar>& input, const Var<Scalar>& weight);

// Elementwise arithmetic on equally shaped operands.
template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b);
template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b);
template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b);
template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar factor);

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& x);
template <typename Scalar>
Var<Scalar> sine(const Var<Scalar>& x);
template <typename Scalar>
Var<Scalar> square(const Var<Scalar>& x);
template <typename Scalar>
Var<Scalar> abs(const Var<Scalar>& x);

// Reductions to a single-element tensor.
template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& x);
template <typename Scalar>
Var<Scalar> mean(const Var<Scalar>& x);

/// Horizontal concatenation of matrices with equal row counts.
template <typename Scalar>
Var<Scalar> concat_cols(const std::vector<Var<Scalar>>& parts);

/// G x C -> (G*times) x C, each row repeated `times` times consecutively.
template <typename Scalar>
Var<Scalar> repeat_rows(const Var<Scalar>& x, Index times);

/// (G*group) x C -> G x C, elementwise max over each block of `group` rows.
template <typename Scalar>
Var<Scalar> max_rows_grouped(const Var<Scalar>& x, Index group);

/// Batch normalization over the rows of an N x C matrix with affine gamma/beta.
/// Training mode normalizes with batch statistics and updates `stats`;
/// eval mode uses the frozen running statistics.
template <typename Scalar>
Var<Scalar> batch_norm(const Var<Scalar>& x, const Var<Scalar>& gamma, const Var<Scalar>& beta,
                       BatchNormStats<Scalar>& stats, bool training);

/// Group normalization of a B x C x (spatial...) tensor.
template <typename Scalar>
Var<Scalar> group_norm(const Var<Scalar>& x, const Var<Scalar>& gamma, const Var<Scalar>& beta, Index groups,
                       Scalar eps = Scalar(1e-5));

/// Number of groups used by the encoders: 8, or C when C < 8.
inline Index default_groups(Index channels) { return channels < 8 ? channels : 8; }

/// Stride-2, kernel-2 3D convolution without padding.
/// `input` is C x D x D x D or B x C x D x D x D, `kernel` is Co x C x 2 x 2 x 2.
template <typename Scalar>
Var<Scalar> conv3d_down(const Var<Scalar>& input, const Var<Scalar>& kernel, const Var<Scalar>& bias);

/// out[b] = sum_k weights(b,k) * table[index(b,k)], entries with index < 0 skipped.
/// Differentiable with respect to `table` only.
template <typename Scalar>
Var<Scalar> gather_weighted(const Var<Scalar>& table, const IndexMatrix& index, const RowMatrix<Scalar>& weights);

template <typename Scalar>
Var<Scalar> reshape(const Var<Scalar>& x, Shape shape);

/// Mean softmax cross-entropy of B x K logits against integer labels.
template <typename Scalar>
Var<Scalar> softmax_cross_entropy(const Var<Scalar>& logits, const std::vector<int>& labels);

}  // namespace inret

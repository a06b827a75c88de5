#pragma once

#include <utility>
#include <vector>

#include "inret/inr/mlp.hpp"

namespace inret {

/// MLP parameters as a set of rows. Layer l contributes one row per output
/// neuron: its incoming weights followed by its bias, zero-padded to the
/// widest row. Layers appear input to output.
struct WeightRowMatrix {
  RowMatrixXf rows;
  /// (fan in, fan out) per layer.
  std::vector<std::pair<Index, Index>> layout;
};

WeightRowMatrix flatten_mlp_weights(const Mlp& mlp);

/// Inverse of flatten_mlp_weights; the activation is not part of the rows.
Mlp unflatten_mlp_weights(const WeightRowMatrix& w, Activation activation = Activation::relu, float omega0 = 30.0f);

/// Row count and width produced for an MLP with these layer widths.
std::pair<Index, Index> weight_rows_shape(const std::vector<Index>& widths);

}  // namespace inret

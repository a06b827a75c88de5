#include "inret/encoders/weights.hpp"

namespace inret {

std::pair<Index, Index> weight_rows_shape(const std::vector<Index>& widths) {
  Index rows = 0, width = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    rows += widths[l + 1];
    width = std::max(width, widths[l] + 1);
  }
  return {rows, width};
}

WeightRowMatrix flatten_mlp_weights(const Mlp& mlp) {
  WeightRowMatrix out;
  const auto [rows, width] = weight_rows_shape(mlp.widths());
  out.rows = RowMatrixXf::Zero(rows, width);
  Index r = 0;
  for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
    const auto& w = mlp.weights[l].value;
    const Index in = w.dim(0), o = w.dim(1);
    out.layout.emplace_back(in, o);
    out.rows.block(r, 0, o, in) = w.matrix().transpose();
    out.rows.block(r, in, o, 1) = mlp.biases[l].value.data();
    r += o;
  }
  return out;
}

Mlp unflatten_mlp_weights(const WeightRowMatrix& w, Activation activation, float omega0) {
  Mlp m;
  m.activation = activation;
  m.omega0 = omega0;
  Index r = 0;
  for (std::size_t l = 0; l < w.layout.size(); ++l) {
    const auto [in, o] = w.layout[l];
    if (r + o > w.rows.rows() || in + 1 > w.rows.cols()) throw ShapeError("weight rows do not match their layout");
    Tensor<float> weight({in, o});
    weight.matrix() = w.rows.block(r, 0, o, in).transpose();
    Tensor<float> bias({o});
    bias.data() = w.rows.block(r, in, o, 1);
    m.weights.emplace_back("mlp." + std::to_string(l) + ".weight", std::move(weight));
    m.biases.emplace_back("mlp." + std::to_string(l) + ".bias", std::move(bias));
    r += o;
  }
  if (r != w.rows.rows()) throw ShapeError("weight rows do not match their layout");
  return m;
}

}  // namespace inret

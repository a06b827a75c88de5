#pragma once

#include <vector>

#include "inret/tensor/ops.hpp"
#include "inret/tensor/random.hpp"

namespace inret {

enum class Activation : std::uint8_t { relu = 0, sine = 1 };

/// Fully connected network. Layer i maps widths[i] -> widths[i+1]; hidden
/// layers use `activation`, the last layer is linear. Sine layers compute
/// sin(omega0 * (x W + b)).
struct Mlp {
  std::vector<Parameter<float>> weights;  // I x O
  std::vector<Parameter<float>> biases;   // O
  Activation activation = Activation::relu;
  float omega0 = 30.0f;

  std::size_t layer_count() const { return weights.size(); }
  Index input_width() const { return weights.front().value.dim(0); }
  std::vector<Index> widths() const;
  std::vector<Parameter<float>*> parameters();

  /// `params` holds the bound weight/bias pairs in layer order.
  Var<float> forward(const Var<float>& input, const std::vector<Var<float>>& params) const;
};

/// Entries drawn from U(-bound, bound) in storage order.
Tensor<float> uniform_tensor(Shape shape, double bound, CounterRng& rng);

/// ReLU network with PyTorch default initialization U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Mlp make_relu_mlp(const std::vector<Index>& widths, CounterRng& rng);

/// SIREN: first layer U(-1/fan_in, 1/fan_in), later layers
/// U(-sqrt(6/fan_in)/omega0, sqrt(6/fan_in)/omega0); biases U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Mlp make_siren(const std::vector<Index>& widths, float omega0, CounterRng& rng);

}  // namespace inret

#include "inret/inr/mlp.hpp"

#include <cmath>

namespace inret {

Tensor<float> uniform_tensor(Shape shape, double bound, CounterRng& rng) {
  Tensor<float> t(std::move(shape));
  for (Index i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.uniform(-bound, bound));
  return t;
}

namespace {

void check_widths(const std::vector<Index>& widths) {
  if (widths.size() < 2) throw ConfigError("an MLP needs at least an input and an output width");
  for (Index w : widths)
    if (w < 1) throw ConfigError("MLP widths must be positive");
}

}  // namespace

std::vector<Index> Mlp::widths() const {
  std::vector<Index> out{input_width()};
  for (const auto& w : weights) out.push_back(w.value.dim(1));
  return out;
}

std::vector<Parameter<float>*> Mlp::parameters() {
  std::vector<Parameter<float>*> out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.push_back(&weights[i]);
    out.push_back(&biases[i]);
  }
  return out;
}

Var<float> Mlp::forward(const Var<float>& input, const std::vector<Var<float>>& params) const {
  if (params.size() != 2 * weights.size()) throw ContractError("MLP forward expects a weight and bias per layer");
  Var<float> h = input;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    h = linear(h, params[2 * i], params[2 * i + 1]);
    if (i + 1 == weights.size()) break;
    h = activation == Activation::sine ? sine(scale(h, omega0)) : relu(h);
  }
  return h;
}

Mlp make_relu_mlp(const std::vector<Index>& widths, CounterRng& rng) {
  check_widths(widths);
  Mlp m;
  m.activation = Activation::relu;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[i]));
    m.weights.emplace_back("mlp." + std::to_string(i) + ".weight", uniform_tensor({widths[i], widths[i + 1]}, bound, rng));
    m.biases.emplace_back("mlp." + std::to_string(i) + ".bias", uniform_tensor({widths[i + 1]}, bound, rng));
  }
  return m;
}

Mlp make_siren(const std::vector<Index>& widths, float omega0, CounterRng& rng) {
  check_widths(widths);
  Mlp m;
  m.activation = Activation::sine;
  m.omega0 = omega0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const double fan_in = static_cast<double>(widths[i]);
    const double bound = i == 0 ? 1.0 / fan_in : std::sqrt(6.0 / fan_in) / omega0;
    m.weights.emplace_back("mlp." + std::to_string(i) + ".weight", uniform_tensor({widths[i], widths[i + 1]}, bound, rng));
    m.biases.emplace_back("mlp." + std::to_string(i) + ".bias",
                          uniform_tensor({widths[i + 1]}, 1.0 / std::sqrt(fan_in), rng));
  }
  return m;
}

}  // namespace inret

#include "inret/tensor/optim.hpp"

#include <cmath>

namespace inret {

template <typename Scalar>
void optimizer_step(OptimizerState<Scalar>& state, const std::vector<Tensor<Scalar>*>& params,
                    const std::vector<const Tensor<Scalar>*>& grads) {
  if (params.size() != grads.size()) throw ShapeError("optimizer_step: parameter and gradient counts differ");
  for (std::size_t i = 0; i < params.size(); ++i) require_shape(grads[i]->shape(), params[i]->shape(), "optimizer_step");
  if (state.first_moment.empty()) {
    for (const auto* p : params) {
      state.first_moment.push_back(Tensor<Scalar>::zeros(p->shape()));
      state.second_moment.push_back(Tensor<Scalar>::zeros(p->shape()));
    }
  }
  if (state.first_moment.size() != params.size()) throw ShapeError("optimizer_step: parameter list changed");
  for (std::size_t i = 0; i < params.size(); ++i) require_shape(state.first_moment[i].shape(), params[i]->shape(), "moment");

  const AdamConfig& c = state.config;
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const auto lr = static_cast<Scalar>(c.learning_rate);
  const auto b1 = static_cast<Scalar>(c.beta1), b2 = static_cast<Scalar>(c.beta2);
  const auto step_size = static_cast<Scalar>(c.learning_rate / bc1);
  const auto sqrt_bc2 = static_cast<Scalar>(std::sqrt(bc2));
  const auto eps = static_cast<Scalar>(c.eps);
  const auto wd = static_cast<Scalar>(c.weight_decay);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data().array();
    auto m = state.first_moment[i].data().array();
    auto v = state.second_moment[i].data().array();
    const auto& g = grads[i]->data().array();
    if (c.decoupled) {
      if (wd != Scalar(0)) p *= Scalar(1) - lr * wd;
      m = b1 * m + (Scalar(1) - b1) * g;
      v = b2 * v + (Scalar(1) - b2) * g.square();
    } else if (wd != Scalar(0)) {
      const auto ge = (g + wd * p).eval();
      m = b1 * m + (Scalar(1) - b1) * ge;
      v = b2 * v + (Scalar(1) - b2) * ge.square();
    } else {
      m = b1 * m + (Scalar(1) - b1) * g;
      v = b2 * v + (Scalar(1) - b2) * g.square();
    }
    p -= step_size * m / (v.sqrt() / sqrt_bc2 + eps);
  }
}

template <typename Scalar>
Adam<Scalar>::Adam(std::vector<Parameter<Scalar>*> params, AdamConfig config) : params_(std::move(params)) {
  state_.config = config;
  if (config.learning_rate <= 0) throw ConfigError("Adam: learning rate must be positive");
}

template <typename Scalar>
void Adam<Scalar>::step() {
  std::vector<Tensor<Scalar>*> values;
  std::vector<const Tensor<Scalar>*> grads;
  for (auto* p : params_) {
    if (p->grad.shape() != p->value.shape()) p->zero_grad();
    values.push_back(&p->value);
    grads.push_back(&p->grad);
  }
  optimizer_step(state_, values, grads);
}

template <typename Scalar>
void Adam<Scalar>::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

template void optimizer_step(OptimizerState<float>&, const std::vector<Tensor<float>*>&,
                             const std::vector<const Tensor<float>*>&);
template void optimizer_step(OptimizerState<double>&, const std::vector<Tensor<double>*>&,
                             const std::vector<const Tensor<double>*>&);
template class Adam<float>;
template class Adam<double>;

}  // namespace inret

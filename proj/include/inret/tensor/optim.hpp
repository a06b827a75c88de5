#pragma once

#include <cstdint>
#include <vector>

#include "inret/tensor/tensor.hpp"

namespace inret {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  // true: AdamW (p <- p(1 - lr*wd) before the Adam delta); false: L2 added to the gradient.
  bool decoupled = false;
};

inline AdamConfig adamw_config(double lr = 1e-4, double weight_decay = 1e-2) {
  return AdamConfig{lr, 0.9, 0.999, 1e-8, weight_decay, true};
}

template <typename Scalar>
struct OptimizerState {
  AdamConfig config;
  std::vector<Tensor<Scalar>> first_moment;
  std::vector<Tensor<Scalar>> second_moment;
  std::int64_t step = 0;
};

/// One Adam/AdamW update with bias correction. Moments are created lazily on
/// the first call and must shape-match `params` afterwards.
template <typename Scalar>
void optimizer_step(OptimizerState<Scalar>& state, const std::vector<Tensor<Scalar>*>& params,
                    const std::vector<const Tensor<Scalar>*>& grads);

/// Adam bound to a fixed parameter list.
template <typename Scalar>
class Adam {
 public:
  Adam(std::vector<Parameter<Scalar>*> params, AdamConfig config);

  void step();
  void zero_grad();

  const OptimizerState<Scalar>& state() const { return state_; }
  void set_learning_rate(double lr) { state_.config.learning_rate = lr; }

 private:
  std::vector<Parameter<Scalar>*> params_;
  OptimizerState<Scalar> state_;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace inret

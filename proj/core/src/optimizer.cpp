#include "rtl/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace rtl {

AdamState AdamState::fresh(const ParamSet& params, double learning_rate) {
  AdamState s;
  s.first_moment = zeros_like(params);
  s.second_moment = zeros_like(params);
  s.learning_rate = learning_rate;
  return s;
}

void adam_step(ParamSet& params, const Gradients& grads, const BinaryMask& mask, AdamState& state) {
  if (!params.congruent_with(grads) || !params.congruent_with(state.first_moment)) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  if (!mask.congruent_with(params)) throw std::invalid_argument("adam_step: mask not congruent with params");

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);

  auto update = [&](double& w, double& m, double& v, double g) {
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    w -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  };

  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Layer& layer = params.layers[l];
    const auto& bits = mask.layers[l];
    auto& mw = state.first_moment.layers[l].weight.data;
    auto& vw = state.second_moment.layers[l].weight.data;
    for (std::size_t i = 0; i < layer.weight.data.size(); ++i) {
      if (!bits[i]) continue;  // pruned: weight and moments stay put
      update(layer.weight.data[i], mw[i], vw[i], grads.layers[l].weight.data[i]);
    }
    auto& mb = state.first_moment.layers[l].bias.data;
    auto& vb = state.second_moment.layers[l].bias.data;
    for (std::size_t i = 0; i < layer.bias.data.size(); ++i) {
      update(layer.bias.data[i], mb[i], vb[i], grads.layers[l].bias.data[i]);
    }
  }
}

}  // namespace rtl

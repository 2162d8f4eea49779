#include "rtl/training.hpp"

#include <stdexcept>

namespace rtl {

double train_step(ParamSet& params, const BinaryMask& mask, const Batch& batch, AdamState& state) {
  auto [output, cache] = forward(params, mask, batch.inputs);

  double loss;
  Tensor loss_grad;
  if (batch.component) {
    const std::size_t k = *batch.component;
    if (k >= output.shape[1]) throw std::invalid_argument("train_step: component out of range");
    if (batch.targets.shape.size() != 2 || batch.targets.shape[1] != 1) {
      throw std::invalid_argument("train_step: component batches need batch x 1 targets");
    }
    Tensor column = Tensor::matrix(output.shape[0], 1);
    for (std::size_t b = 0; b < output.shape[0]; ++b) column.at(b, 0) = output.at(b, k);
    auto [l, g] = loss_and_grad(column, batch.targets, batch.loss);
    loss = l;
    loss_grad = Tensor::matrix(output.shape[0], output.shape[1]);
    for (std::size_t b = 0; b < output.shape[0]; ++b) loss_grad.at(b, k) = g.at(b, 0);
  } else {
    auto [l, g] = loss_and_grad(output, batch.targets, batch.loss);
    loss = l;
    loss_grad = std::move(g);
  }

  Gradients grads = backward(cache, loss_grad);
  adam_step(params, grads, mask, state);
  return loss;
}

}  // namespace rtl

#pragma once

#include <utility>
#include <vector>

#include "rtl/mask.hpp"
#include "rtl/params.hpp"
#include "rtl/tensor.hpp"

namespace rtl {

enum class ActivationKind { Linear, Relu };
enum class LossKind { MeanSquaredError, BceWithLogits };

// Everything backward needs from the matching forward call: per-layer inputs,
// pre-activations, and the masked weights that were actually applied.
struct ForwardCache {
  std::vector<Tensor> inputs;           // inputs[l] = activation fed into layer l
  std::vector<Tensor> pre_activations;  // pre_activations[l] = W~ x + b
  std::vector<Tensor> masked_weights;   // masked_weights[l] = mask[l] * weight[l]
  std::vector<std::vector<std::uint8_t>> mask_bits;
  ActivationKind activation = ActivationKind::Relu;
  std::size_t batch = 0;
};

// Runs f(x; mask * params). The hidden layers use `activation`; the output
// layer is always linear. input is (batch x in_dim).
std::pair<Tensor, ForwardCache> forward(const ParamSet& params, const BinaryMask& mask, const Tensor& input,
                                        ActivationKind activation = ActivationKind::Relu);

// Reverse-mode pass. loss_grad is dL/d(output), (batch x out_dim). Gradients
// at pruned weights come out exactly zero because the loss only sees mask * w.
Gradients backward(const ForwardCache& cache, const Tensor& loss_grad);

// Loss averaged over all output entries, and its gradient w.r.t. the output.
// BceWithLogits expects targets in [0,1] and raw logits as output.
std::pair<double, Tensor> loss_and_grad(const Tensor& output, const Tensor& target, LossKind kind);

}  // namespace rtl

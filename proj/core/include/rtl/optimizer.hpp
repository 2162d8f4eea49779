#pragma once

#include <cstddef>

#include "rtl/mask.hpp"
#include "rtl/params.hpp"

namespace rtl {

// Masked Adam. Pruned weights are skipped entirely: neither the weight nor
// its moment accumulators move, so optimizer state cannot leak updates into
// pruned positions. Biases always update.
struct AdamState {
  ParamSet first_moment;
  ParamSet second_moment;
  std::size_t step = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState fresh(const ParamSet& params, double learning_rate);
};

void adam_step(ParamSet& params, const Gradients& grads, const BinaryMask& mask, AdamState& state);

}  // namespace rtl

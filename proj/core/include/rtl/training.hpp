#pragma once

#include <functional>
#include <optional>
#include <span>

#include "rtl/network.hpp"
#include "rtl/optimizer.hpp"
#include "rtl/rng.hpp"

namespace rtl {

// One mini-batch of training data. When `component` is set, the loss is
// computed on that output column only (a single-logit one-vs-rest detector
// reading one head of a multi-logit network); targets are then batch x 1.
struct Batch {
  Tensor inputs;
  Tensor targets;
  LossKind loss = LossKind::MeanSquaredError;
  std::optional<std::size_t> component;
};

// Materializes a batch for subnetwork `subnet` from the given sample indices.
// Classification builders add sampled negatives here; the rng is a per-subnet
// stream so subnetworks stay independent.
using BatchBuilder = std::function<Batch(std::size_t subnet, std::span<const std::size_t> indices, Rng& rng)>;

// One masked forward/backward/Adam update. Returns the batch loss.
double train_step(ParamSet& params, const BinaryMask& mask, const Batch& batch, AdamState& state);

}  // namespace rtl
